#pragma once

#include <algorithm>
#include <vector>

#include "fbpsim/grid.hpp"

namespace fbpsim {

/// Nodal fields at time t. mu is the boundary-shifted chemical potential
/// (zero on the boundary), w the rate of change of u, xi the selection in beta(w).
struct SimState {
    double t = 0.0;
    Field u, mu, w, xi, mu_flat;
};

/// Solver bookkeeping for one time step.
struct StepStats {
    int picard_iterations = 0;
    std::vector<double> gaps_linf;  ///< ||v^{j+1} - v^j||_inf per pass
    std::vector<double> gaps_l2;    ///< same in the h-weighted L2 norm
    int newton_iterations = 0;
    double elliptic_residual = 0.0;
    bool fallback_used = false;

    /// Largest gap_{j+1} / gap_j over pairs whose gap_j exceeds `floor`.
    double max_contraction_ratio(double floor) const {
        double r = 0.0;
        for (std::size_t j = 1; j < gaps_l2.size(); ++j)
            if (gaps_l2[j - 1] > floor) r = std::max(r, gaps_l2[j] / gaps_l2[j - 1]);
        return r;
    }
};

}  // namespace fbpsim
