#pragma once

#include <vector>

#include "fpm/optics.hpp"
#include "fpm/tiles.hpp"

namespace fpm {

enum class StitchAxis { Horizontal, Vertical };

// mu1/mu2: complex means over the shared overlap strip (trailing strip of f1,
// leading strip of f2). The ratio removes per-tile global amplitude and
// phase factors before the two fields are joined.
Complex mean_ratio(const ComplexField& f1, const ComplexField& f2, int overlap, StitchAxis axis);

// Hard cut at the overlap midline: pixels before row/col (extent1 -
// overlap/2) come from f1 verbatim, the rest from (mu1/mu2) * f2. Output
// extent along the axis is extent1 + extent2 - overlap. overlap == 0 joins
// the fields unscaled.
ComplexField stitch_pair(const ComplexField& f1, const ComplexField& f2, int overlap,
                         StitchAxis axis);

// Rows are stitched left to right, then the row strips top to bottom.
// Overlaps are taken from the actual tile origins (HR px = LR px * upsample),
// which handles the clamped final tile.
ComplexField stitch_mosaic(const std::vector<ComplexField>& tiles,
                           const std::vector<TileSpec>& specs, const OpticalConfig& cfg);

} // namespace fpm
