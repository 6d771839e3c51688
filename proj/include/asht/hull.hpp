#pragma once

#include <vector>

namespace asht {

// One lower facet of the lifted point set: the affine map z -> intercept + <grad, z>.
struct Facet {
    std::vector<double> grad;
    double intercept = 0.0;
    std::vector<int> vertices;
    double operator()(const double* z) const {
        double v = intercept;
        for (std::size_t k = 0; k < grad.size(); ++k) v += grad[k] * z[k];
        return v;
    }
};

// Lower convex envelope of finitely many (point, value) pairs in R^m.
struct EnvelopeModel {
    int m = 0;
    std::vector<std::vector<double>> points;
    std::vector<double> values;
    std::vector<Facet> facets;                 // lower facets of the lifted hull
    std::vector<std::vector<int>> vertex_facets;  // per input point: incident facets (empty if not a vertex)
    bool degenerate = false;                   // affine fallback was used

    // Envelope value at z, valid on the convex hull of the points.
    double eval(const double* z) const;
    // Largest amount by which the envelope exceeds an input value (should be <= 0 up to rounding).
    double dominance_violation() const;
};

// Builds the envelope by incremental beneath-beyond hull construction on the lifted points.
// Affinely degenerate inputs fall back to the affine interpolant in the spanned subspace.
EnvelopeModel lower_convex_envelope(const std::vector<std::vector<double>>& points,
                                    const std::vector<double>& values);

// Restriction to the closed ball B(center, radius); throws DomainError if no point remains.
EnvelopeModel local_convex_envelope(const std::vector<std::vector<double>>& points,
                                    const std::vector<double>& values, const std::vector<double>& center,
                                    double radius);

}  // namespace asht
