#pragma once

// Straightforward re-statement of the curve network used to cross-check the
// optimized forward pass and the parameter bookkeeping. Layout per layer:
// depthwise weights [cin][3][3], depthwise biases [cin], pointwise weights
// [cout][cin], pointwise biases [cout].

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct RefLayer {
  int cin, cout;
  std::vector<int> sources;  // -1 = the input image, k = output of layer k (0-based)
};

inline std::vector<RefLayer> reference_topology(int c) {
  return {
      {3, c, {-1}},         {c, c, {0}},         {c, c, {1}},         {c, c, {2}},
      {2 * c, c, {2, 3}},   {2 * c, c, {1, 4}},  {2 * c, 3, {0, 5}},
  };
}

/// Layer-sum count: depthwise (cin * 9 + cin) plus pointwise (cin * cout + cout).
inline std::size_t reference_param_count(int c) {
  std::size_t n = 0;
  for (const auto& l : reference_topology(c)) n += l.cin * 9 + l.cin + l.cin * l.cout + l.cout;
  return n;
}

/// Feature maps as [channel][y][x] nested vectors.
using Maps = std::vector<std::vector<std::vector<double>>>;

inline Maps reference_forward(const std::vector<double>& params, const Maps& image, int c) {
  const int h = static_cast<int>(image[0].size());
  const int w = static_cast<int>(image[0][0].size());
  std::vector<Maps> outs;
  std::size_t off = 0;
  const auto topo = reference_topology(c);
  for (std::size_t li = 0; li < topo.size(); ++li) {
    const auto& L = topo[li];
    Maps in;
    for (int s : L.sources) {
      const Maps& src = s < 0 ? image : outs[static_cast<std::size_t>(s)];
      in.insert(in.end(), src.begin(), src.end());
    }
    const std::size_t dw_w = off, dw_b = dw_w + L.cin * 9, pw_w = dw_b + L.cin, pw_b = pw_w + L.cin * L.cout;
    off = pw_b + L.cout;
    Maps dw(L.cin, std::vector<std::vector<double>>(h, std::vector<double>(w, 0.0)));
    for (int ci = 0; ci < L.cin; ++ci)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = params[dw_b + ci];
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              s += params[dw_w + ci * 9 + (dy + 1) * 3 + (dx + 1)] * in[ci][yy][xx];
            }
          dw[ci][y][x] = s;
        }
    Maps out(L.cout, std::vector<std::vector<double>>(h, std::vector<double>(w, 0.0)));
    const bool last = li + 1 == topo.size();
    for (int co = 0; co < L.cout; ++co)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = params[pw_b + co];
          for (int ci = 0; ci < L.cin; ++ci) s += params[pw_w + co * L.cin + ci] * dw[ci][y][x];
          out[co][y][x] = last ? std::tanh(s) : std::max(0.0, s);
        }
    outs.push_back(std::move(out));
  }
  return outs.back();
}

}  // namespace oracle
