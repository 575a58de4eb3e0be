#pragma once

#include "mfgsens/grid.hpp"
#include "mfgsens/mfg_solver.hpp"
#include "mfgsens/model.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace mfgsens {

/// Taylor coefficients (u^(k), m^(k)) at epsilon = 0 for k = 0..K.
struct TaylorTable {
    int K = 0;
    std::vector<Field> u;
    std::vector<Field> m;
    Field F0;
    ModelParams base_params;
    Discretization disc;

    /// u_x^(k) and m^(k) rows at time node n for orders 0..upto.
    std::vector<OrderRows> rows_at(int n, int upto, const std::vector<Field>& ux) const;
};

struct Order0 {
    Field u;
    Field m;
    Field F;
};

/// epsilon = 0 problem: standalone HJB, then one Fokker-Planck solve with drift F^(0).
Order0 solve_order0(const ModelParams& params, const Discretization& disc,
                    const SolveOptions& opts);

/// One backward solve for u^(k) (drift -F^(0), source J~_k) followed by one forward solve for
/// m^(k) (drift F^(0), flux K~_k - u_x^(k) m^(0) / 2). Needs orders 0..k-1 in `table`.
std::pair<Field, Field> solve_order_k(const TaylorTable& table, int k, const Discretization& disc,
                                      const SolveOptions& opts);

/// Full cascade through order K (0 <= K <= 12). params.epsilon is ignored.
TaylorTable build_cascade(const ModelParams& params, const Discretization& disc,
                          const SolveOptions& opts, int K);

/// P_k = sum_{j<=k} eps^j / j! (u^(j), m^(j)).
std::pair<Field, Field> taylor_eval(const TaylorTable& table, double epsilon, int k);

/// k! as an exact integer.
unsigned long long factorial(int k);

/// Writes u_<k>.csv, m_<k>.csv and manifest.json into `dir`.
void write_taylor_table(const TaylorTable& table, const std::filesystem::path& dir);

}  // namespace mfgsens
