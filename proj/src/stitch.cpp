#include "fpm/stitch.hpp"

#include <algorithm>
#include <map>

namespace fpm {

namespace {

// rows-first view: for the vertical axis we stitch transposed fields
ComplexField maybe_transpose(const ComplexField& f, StitchAxis axis) {
    if (axis == StitchAxis::Horizontal) return f;
    return f.transpose();
}

} // namespace

Complex mean_ratio(const ComplexField& f1, const ComplexField& f2, int overlap, StitchAxis axis) {
    if (overlap <= 0) throw DataError("mean_ratio requires a positive overlap");
    ComplexField a = maybe_transpose(f1, axis);
    ComplexField b = maybe_transpose(f2, axis);
    if (a.rows() != b.rows()) throw DataError("overlap strips differ in cross-axis extent");
    if (overlap > a.cols() || overlap > b.cols())
        throw DataError("overlap exceeds field extent");
    const Complex mu1 = a.rightCols(overlap).mean();
    const Complex mu2 = b.leftCols(overlap).mean();
    if (std::abs(mu2) < 1e-12) throw DataError("degenerate overlap: |mu2| vanishes");
    return mu1 / mu2;
}

ComplexField stitch_pair(const ComplexField& f1, const ComplexField& f2, int overlap,
                         StitchAxis axis) {
    ComplexField a = maybe_transpose(f1, axis);
    ComplexField b = maybe_transpose(f2, axis);
    if (a.rows() != b.rows()) throw DataError("stitch_pair: cross-axis dimensions differ");
    if (overlap < 0 || overlap >= a.cols() || overlap >= b.cols())
        throw DataError("stitch_pair: overlap out of range");
    const Complex ratio = overlap > 0 ? mean_ratio(f1, f2, overlap, axis) : Complex(1.0, 0.0);
    const Eigen::Index out_cols = a.cols() + b.cols() - overlap;
    const Eigen::Index cut = a.cols() - overlap / 2; // overlap midline, floor
    ComplexField out(a.rows(), out_cols);
    out.leftCols(cut) = a.leftCols(cut);
    const Eigen::Index b_start = cut - (a.cols() - overlap);
    out.rightCols(out_cols - cut) = ratio * b.rightCols(b.cols() - b_start);
    return maybe_transpose(out, axis);
}

ComplexField stitch_mosaic(const std::vector<ComplexField>& tiles,
                           const std::vector<TileSpec>& specs, const OpticalConfig& cfg) {
    if (tiles.size() != specs.size() || tiles.empty())
        throw DataError("stitch_mosaic: tile/spec count mismatch");
    const int up = cfg.upsample;

    // bucket tiles into rows by y origin, sort rows and columns
    std::map<int, std::vector<size_t>> rows;
    for (size_t i = 0; i < specs.size(); ++i) rows[specs[i].y0].push_back(i);
    for (auto& [y0, idx] : rows)
        std::sort(idx.begin(), idx.end(),
                  [&](size_t a, size_t b) { return specs[a].x0 < specs[b].x0; });

    std::vector<ComplexField> strips;
    std::vector<int> strip_y0;
    for (auto& [y0, idx] : rows) {
        ComplexField strip = tiles[idx[0]];
        int covered_end = specs[idx[0]].x0 + specs[idx[0]].size; // LR px
        for (size_t k = 1; k < idx.size(); ++k) {
            const TileSpec& s = specs[idx[k]];
            const int ov = covered_end - s.x0;
            if (ov < 0) throw DataError("stitch_mosaic: gap between adjacent tiles");
            strip = stitch_pair(strip, tiles[idx[k]], ov * up, StitchAxis::Horizontal);
            covered_end = s.x0 + s.size;
        }
        strips.push_back(std::move(strip));
        strip_y0.push_back(y0);
    }

    ComplexField out = strips[0];
    int covered_end = strip_y0[0] + cfg.tile_size;
    for (size_t k = 1; k < strips.size(); ++k) {
        const int ov = covered_end - strip_y0[k];
        if (ov < 0) throw DataError("stitch_mosaic: gap between tile rows");
        out = stitch_pair(out, strips[k], ov * up, StitchAxis::Vertical);
        covered_end = strip_y0[k] + cfg.tile_size;
    }
    return out;
}

} // namespace fpm
