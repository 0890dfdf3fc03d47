#pragma once

// Replaces the global allocation functions with size-recording versions.
// Include from exactly one .cpp in a program (the one holding main).

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <new>

#include "lowlight/alloc_tracker.hpp"

namespace lowlight::alloc::hooks_detail {

constexpr std::size_t kHeader = alignof(std::max_align_t);

inline void* allocate(std::size_t size) noexcept {
  void* raw = std::malloc(size + kHeader);
  if (!raw) return nullptr;
  *static_cast<std::size_t*>(raw) = size;
  note_alloc(static_cast<std::int64_t>(size));
  return static_cast<char*>(raw) + kHeader;
}

inline void release(void* p) noexcept {
  if (!p) return;
  void* raw = static_cast<char*>(p) - kHeader;
  note_free(static_cast<std::int64_t>(*static_cast<std::size_t*>(raw)));
  std::free(raw);
}

// Over-aligned blocks keep the size just before the user pointer and the
// header padded to the alignment, so release can recover the raw pointer.
inline void* allocate_aligned(std::size_t size, std::align_val_t al) noexcept {
  const std::size_t a = std::max(static_cast<std::size_t>(al), sizeof(std::size_t));
  const std::size_t total = ((size + a + a - 1) / a) * a;
  void* raw = std::aligned_alloc(a, total);
  if (!raw) return nullptr;
  char* user = static_cast<char*>(raw) + a;
  *reinterpret_cast<std::size_t*>(user - sizeof(std::size_t)) = size;
  note_alloc(static_cast<std::int64_t>(size));
  return user;
}

inline void release_aligned(void* p, std::align_val_t al) noexcept {
  if (!p) return;
  const std::size_t a = std::max(static_cast<std::size_t>(al), sizeof(std::size_t));
  char* user = static_cast<char*>(p);
  note_free(static_cast<std::int64_t>(*reinterpret_cast<std::size_t*>(user - sizeof(std::size_t))));
  std::free(user - a);
}

inline void* allocate_or_throw(std::size_t size) {
  for (;;) {
    if (void* p = allocate(size)) return p;
    auto handler = std::get_new_handler();
    if (!handler) throw std::bad_alloc();
    handler();
  }
}

inline void* allocate_aligned_or_throw(std::size_t size, std::align_val_t al) {
  for (;;) {
    if (void* p = allocate_aligned(size, al)) return p;
    auto handler = std::get_new_handler();
    if (!handler) throw std::bad_alloc();
    handler();
  }
}

struct Installer {
  Installer() noexcept { g_hooks_installed.store(true); }
};
inline const Installer installer;

}  // namespace lowlight::alloc::hooks_detail

namespace hd = lowlight::alloc::hooks_detail;

void* operator new(std::size_t n) { return hd::allocate_or_throw(n); }
void* operator new[](std::size_t n) { return hd::allocate_or_throw(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept { return hd::allocate(n); }
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept { return hd::allocate(n); }
void* operator new(std::size_t n, std::align_val_t a) { return hd::allocate_aligned_or_throw(n, a); }
void* operator new[](std::size_t n, std::align_val_t a) { return hd::allocate_aligned_or_throw(n, a); }
void* operator new(std::size_t n, std::align_val_t a, const std::nothrow_t&) noexcept {
  return hd::allocate_aligned(n, a);
}
void* operator new[](std::size_t n, std::align_val_t a, const std::nothrow_t&) noexcept {
  return hd::allocate_aligned(n, a);
}

void operator delete(void* p) noexcept { hd::release(p); }
void operator delete[](void* p) noexcept { hd::release(p); }
void operator delete(void* p, std::size_t) noexcept { hd::release(p); }
void operator delete[](void* p, std::size_t) noexcept { hd::release(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { hd::release(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { hd::release(p); }
void operator delete(void* p, std::align_val_t a) noexcept { hd::release_aligned(p, a); }
void operator delete[](void* p, std::align_val_t a) noexcept { hd::release_aligned(p, a); }
void operator delete(void* p, std::size_t, std::align_val_t a) noexcept { hd::release_aligned(p, a); }
void operator delete[](void* p, std::size_t, std::align_val_t a) noexcept { hd::release_aligned(p, a); }
void operator delete(void* p, std::align_val_t a, const std::nothrow_t&) noexcept { hd::release_aligned(p, a); }
void operator delete[](void* p, std::align_val_t a, const std::nothrow_t&) noexcept { hd::release_aligned(p, a); }
