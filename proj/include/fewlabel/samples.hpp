#pragma once

#include <cstddef>
#include <vector>

namespace fewlabel {

/// Paired observations (f = pseudolabel score, h = gold label). This is the
/// small, expensive dataset: for rate estimation h is 0/1 and f lies in
/// [0, 1], but every operation accepts arbitrary finite reals.
struct LabelledSample {
    std::vector<double> f;
    std::vector<double> h;

    std::size_t size() const { return h.size(); }

    bool operator==(const LabelledSample&) const = default;
};

/// Pseudolabel scores on the large, cheap dataset.
struct UnlabelledSample {
    std::vector<double> f;

    std::size_t size() const { return f.size(); }

    bool operator==(const UnlabelledSample&) const = default;
};

/// Throws ShapeError on length mismatch, FormatError on non-finite values.
void validate(const LabelledSample& sample);
void validate(const UnlabelledSample& sample);

} // namespace fewlabel
