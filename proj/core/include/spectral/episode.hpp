#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spectral/mat.hpp"

namespace spectral {

/// Role of a row block inside the auxiliary matrix P.
enum class BlockRole {
    Placeholder,  // zeros, scratch space for the forward pass
    Identity,     // [I_d | 0]
    Sphere,       // unit initial vectors in the first k columns
    Indicator,    // [I_{N1} | 0] (GMM variant)
    Bias,         // a single row of ones (GMM variant)
};

struct AuxBlock {
    BlockRole role;
    std::size_t offset;  // first row, relative to the top of P
    std::size_t rows;
};

enum class AuxVariant { None, Pca, Gmm };

/// Block structure of P. Row offsets are relative to P; add d for rows of H.
struct AuxLayout {
    AuxVariant variant = AuxVariant::None;
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t n1 = 0;  // GMM only
    std::vector<AuxBlock> blocks;

    std::size_t rows() const noexcept;
    const AuxBlock& block(std::size_t index) const { return blocks.at(index); }
    /// First row of block `index` inside H = [X; P].
    std::size_t h_row(std::size_t index) const { return d + blocks.at(index).offset; }
};

/// Context-augmented input H = [X; P].
struct Episode {
    Mat h;
    std::size_t d = 0;
    AuxLayout layout;

    std::size_t embed_dim() const noexcept { return h.rows(); }
    std::size_t n() const noexcept { return h.cols(); }
    Mat x() const { return h.block(0, 0, d, h.cols()); }
};

/// Stacks X over P; P may have zero rows. `embed_dim` > rows pads with zero rows.
Episode make_episode(const Mat& x, const Mat& p, const AuxLayout& layout, std::size_t embed_dim = 0);

std::string to_string(AuxVariant v);

}  // namespace spectral
