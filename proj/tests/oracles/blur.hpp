#pragma once

#include <cmath>

#include "lowlight/image.hpp"

namespace oracle {

/// Gaussian blur over a d x d window with border renormalization, computed directly.
inline lowlight::BasicImage<double> gaussian_blur(const lowlight::BasicImage<double>& img, int d, double sigma) {
  lowlight::BasicImage<double> out(img.width(), img.height(), img.channels());
  const int r = d / 2;
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        double num = 0.0, den = 0.0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= img.height() || xx < 0 || xx >= img.width()) continue;
            const double wgt = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            num += wgt * img.at(c, yy, xx);
            den += wgt;
          }
        out.at(c, y, x) = num / den;
      }
  return out;
}

}  // namespace oracle
