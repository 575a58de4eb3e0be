#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/mfg_solver.hpp"
#include "mfgsens/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfgsens {

struct DiagnosticSeries {
    std::string name;
    Row times;
    Row values;
    /// Time integral of `values`, for series that carry one.
    std::optional<double> total;

    double sup() const noexcept;
};

/// Residual of d/dt Q(e^{-rt} w mu) + e^{-rt} Q(F0 G mu + Psi mu + Phi w_x + w_x (G - w_x) m0 / 2)
/// per time node. Time derivative by centered differences (second-order one-sided at the
/// ends), space integrals by trapezoid.
DiagnosticSeries duality_residual(const MFGSolution& base, const LinearizedSolution& lin,
                                  const Field& Psi, const Field& Phi, const ModelParams& params,
                                  const Discretization& disc);

struct MassMoment {
    DiagnosticSeries mass;
    DiagnosticSeries moment;
    DiagnosticSeries l1;
};

/// Per time node: Q(f), Q(x |f|), Q(|f|).
MassMoment mass_and_moment(const Field& f, const Discretization& disc);

/// e^{-rt} Q(w_x^2 m0) per time node; `total` holds its trapezoid time integral.
DiagnosticSeries energy_series(const Field& w, const Field& m0, const ModelParams& params,
                               const Discretization& disc);

/// CSV `name,t,value`.
void write_series_csv(std::ostream& os, const std::vector<DiagnosticSeries>& series);

}  // namespace mfgsens
