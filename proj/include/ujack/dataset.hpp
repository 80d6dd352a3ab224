#pragma once

// Row-major dataset with stable original row ids.
//
// Deleting rows produces a reduced Dataset whose rows keep the ids they had
// in the parent.  Everything downstream (randomization substreams, cached
// per-tuple kernel values, jackknife re-evaluation) is keyed by those
// original ids, so a quantity computed on a reduced dataset matches what a
// from-scratch computation on the surviving rows would give.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ujack {

class Dataset {
 public:
  Dataset() : n_(0), width_(0) {}

  // Row-major values, n rows of `width` doubles; ids default to 0..n-1.
  Dataset(std::vector<double> values, long long width)
      : width_(width), vals_(std::move(values)) {
    if (width <= 0 || vals_.size() % static_cast<std::size_t>(width) != 0)
      throw std::invalid_argument("dataset-shape");
    n_ = static_cast<long long>(vals_.size()) / width;
    ids_.resize(static_cast<std::size_t>(n_));
    for (long long i = 0; i < n_; ++i) ids_[static_cast<std::size_t>(i)] = i;
  }

  static Dataset from_scalars(std::vector<double> values) {
    return Dataset(std::move(values), 1);
  }

  // Features first, response last; width = k + 1.
  static Dataset from_xy(const std::vector<double>& x_rowmajor, long long k,
                         const std::vector<double>& y) {
    const long long n = static_cast<long long>(y.size());
    if (static_cast<long long>(x_rowmajor.size()) != n * k)
      throw std::invalid_argument("dataset-shape");
    std::vector<double> vals(static_cast<std::size_t>(n * (k + 1)));
    for (long long i = 0; i < n; ++i) {
      for (long long j = 0; j < k; ++j)
        vals[static_cast<std::size_t>(i * (k + 1) + j)] =
            x_rowmajor[static_cast<std::size_t>(i * k + j)];
      vals[static_cast<std::size_t>(i * (k + 1) + k)] =
          y[static_cast<std::size_t>(i)];
    }
    return Dataset(std::move(vals), k + 1);
  }

  long long n() const { return n_; }
  long long width() const { return width_; }

  const double* row(long long i) const {
    return vals_.data() + static_cast<std::size_t>(i * width_);
  }
  double scalar(long long i) const {
    return vals_[static_cast<std::size_t>(i * width_)];
  }
  // Response = last column; features = leading width()-1 columns.
  double y(long long i) const {
    return vals_[static_cast<std::size_t>(i * width_ + width_ - 1)];
  }
  long long id(long long i) const { return ids_[static_cast<std::size_t>(i)]; }

  // Reduced copy without the given row positions (0-based, strictly
  // increasing).  Surviving rows keep their original ids.
  Dataset without_rows(const std::vector<long long>& drop) const {
    Dataset out;
    out.width_ = width_;
    out.n_ = n_ - static_cast<long long>(drop.size());
    out.vals_.reserve(static_cast<std::size_t>(out.n_ * width_));
    out.ids_.reserve(static_cast<std::size_t>(out.n_));
    std::size_t d = 0;
    for (long long i = 0; i < n_; ++i) {
      if (d < drop.size() && drop[d] == i) {
        ++d;
        continue;
      }
      const double* r = row(i);
      out.vals_.insert(out.vals_.end(), r, r + width_);
      out.ids_.push_back(ids_[static_cast<std::size_t>(i)]);
    }
    if (d != drop.size()) throw std::invalid_argument("dataset-drop-rows");
    return out;
  }

 private:
  long long n_;
  long long width_;
  std::vector<double> vals_;
  std::vector<long long> ids_;
};

}  // namespace ujack
