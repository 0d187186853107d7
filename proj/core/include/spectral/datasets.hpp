#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "spectral/mat.hpp"
#include "spectral/rng.hpp"

namespace spectral {

struct GmmInstance {
    Mat x;               // d x N, samples as columns
    std::vector<int> z;  // labels in {0, 1}
    Vec mu0;
    Vec mu1;
    double sigma2 = 1.0;
};

/// X = L Z with L (d x d) and Z (d x N) standard normal. `mixing` replaces L when given.
Mat gen_synthetic_pca(std::size_t d, std::size_t n, Rng& rng, const Mat* mixing = nullptr);

/// Two balanced spherical clusters at c -/+ (sep/2) u, c ~ N(0, I), u uniform on the sphere.
GmmInstance gen_gmm(std::size_t d, std::size_t n, double sep, double sigma2, Rng& rng);

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

struct CsvOptions {
    bool transpose = false;  // file rows are samples; return features x samples
};

/// Rectangular numeric CSV; a non-numeric first row is treated as a header.
Mat parse_csv_matrix(std::string_view text, const CsvOptions& opts = {});
Mat load_csv_matrix(const std::string& path, const CsvOptions& opts = {});

/// %.17g formatting, so finite values round-trip exactly.
std::string format_double(double v);
std::string to_csv(const Mat& m);
void write_csv_matrix(const std::string& path, const Mat& m);

}  // namespace spectral
