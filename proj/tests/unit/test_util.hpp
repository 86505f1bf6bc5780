/*
 * Copyright 2026 The hyptree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Independent oracles and fixtures shared by the unit tests. Nothing here
// calls into the code paths it is used to check.

#ifndef HYPTREE_TESTS_TEST_UTIL_HPP_
#define HYPTREE_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace hyptree::testing {

/// Gain written exactly as the textbook three-term formula.
inline double direct_gain(double gl, double hl, double gr, double hr) {
  return gl * gl / hl + gr * gr / hr - (gl + gr) * (gl + gr) / (hl + hr);
}

/// Best gain over every midpoint between consecutive distinct raw values of
/// every column, by direct summation per candidate threshold.
inline double brute_force_best_gain(const std::vector<std::vector<double>>& cols,
                                    const std::vector<double>& g, const std::vector<double>& h,
                                    std::size_t min_child_rows = 1) {
  double best = -1.0;
  for (const auto& col : cols) {
    std::vector<double> distinct = col;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      const double thr = (distinct[i - 1] + distinct[i]) / 2.0;
      double gl = 0, hl = 0, gr = 0, hr = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t r = 0; r < col.size(); ++r) {
        if (col[r] < thr) {
          gl += g[r];
          hl += h[r];
          ++nl;
        } else {
          gr += g[r];
          hr += h[r];
          ++nr;
        }
      }
      if (nl < min_child_rows || nr < min_child_rows) continue;
      best = std::max(best, direct_gain(gl, hl, gr, hr));
    }
  }
  return best;
}

/// AUC by counting every positive/negative pair.
inline double brute_force_auc(const std::vector<double>& y, const std::vector<double>& s) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0.0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline std::vector<double> normal_vector(std::size_t n, std::mt19937_64& rng, double mean = 0.0,
                                         double sd = 1.0) {
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double stddev(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hyptree_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace hyptree::testing

#endif  // HYPTREE_TESTS_TEST_UTIL_HPP_
