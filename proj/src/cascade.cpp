#include "mfgsens/cascade.hpp"

#include "mfgsens/errors.hpp"
#include "mfgsens/io.hpp"
#include "mfgsens/kernels.hpp"

#include <cmath>
#include <string>

namespace mfgsens {

std::vector<OrderRows> TaylorTable::rows_at(int n, int upto, const std::vector<Field>& ux) const {
    std::vector<OrderRows> rows;
    rows.reserve(static_cast<std::size_t>(upto) + 1);
    for (int j = 0; j <= upto; ++j) rows.push_back({ux[j].row(n), m[j].row(n)});
    return rows;
}

unsigned long long factorial(int k) {
    if (k < 0 || k > 20) throw InvalidInput("factorial: order out of range");
    unsigned long long f = 1;
    for (int j = 2; j <= k; ++j) f *= static_cast<unsigned long long>(j);
    return f;
}

Order0 solve_order0(const ModelParams& params, const Discretization& disc, const SolveOptions& opts) {
    if (params.epsilon != 0.0) throw InvalidInput("solve_order0: params.epsilon must be 0");
    params.validate();
    opts.validate();
    const Row A(disc.steps(), 0.5);  // (alpha(0) + beta(0) eta) / 2
    HJBSolution hjb = solve_hjb(A, params, disc, opts.tol / 10.0);
    Field m = solve_forward_fp(hjb.F, Field(disc), params.M.sample(disc), disc, params.sigma);
    return {std::move(hjb.u), std::move(m), std::move(hjb.F)};
}

std::pair<Field, Field> solve_order_k(const TaylorTable& table, int k, const Discretization& disc,
                                      const SolveOptions& opts) {
    opts.validate();
    if (k < 1 || k > kMaxDerivativeOrder) throw InvalidInput("solve_order_k: k must be in [1, 12]");
    if (static_cast<int>(table.u.size()) < k || static_cast<int>(table.m.size()) < k)
        throw MissingOrder("solve_order_k: orders below " + std::to_string(k) + " are missing");
    if (!(table.disc == disc)) throw InvalidInput("solve_order_k: table grid differs");

    std::vector<Field> ux;
    for (int j = 0; j < k; ++j) ux.push_back(diff_x(table.u[j]));

    Field J(disc), K(disc);
    for (int n = 0; n <= disc.Nt; ++n) {
        const auto rows = table.rows_at(n, k - 1, ux);
        const SplitSources s = assemble_J_K(k, rows, disc.t(n), 0.0, table.base_params, disc);
        std::copy(s.J_known.begin(), s.J_known.end(), J.row(n).begin());
        std::copy(s.K_known.begin(), s.K_known.end(), K.row(n).begin());
    }

    const Field& F0 = table.F0;
    const Field& m0 = table.m[0];
    const Row zero_row(disc.nodes(), 0.0);
    Field u_k = solve_backward_parabolic(-1.0 * F0, table.base_params.r, J, zero_row,
                                         BoundarySpec::homogeneous(disc), disc,
                                         table.base_params.sigma);
    const Field ux_k = diff_x(u_k);
    for (int n = 0; n <= disc.Nt; ++n)
        for (int i = 0; i <= disc.Nx; ++i) K(n, i) -= 0.5 * ux_k(n, i) * m0(n, i);
    Field m_k = solve_forward_fp(F0, K, zero_row, disc, table.base_params.sigma);
    return {std::move(u_k), std::move(m_k)};
}

TaylorTable build_cascade(const ModelParams& params, const Discretization& disc,
                          const SolveOptions& opts, int K) {
    if (K < 0 || K > kMaxDerivativeOrder) throw InvalidInput("cascade order K must be in [0, 12]");
    TaylorTable table;
    table.K = K;
    table.base_params = params.with_epsilon(0.0);
    table.disc = disc;
    Order0 o = solve_order0(table.base_params, disc, opts);
    table.u.push_back(std::move(o.u));
    table.m.push_back(std::move(o.m));
    table.F0 = std::move(o.F);
    for (int k = 1; k <= K; ++k) {
        auto [u_k, m_k] = solve_order_k(table, k, disc, opts);
        table.u.push_back(std::move(u_k));
        table.m.push_back(std::move(m_k));
    }
    return table;
}

std::pair<Field, Field> taylor_eval(const TaylorTable& table, double epsilon, int k) {
    if (k < 0 || k > table.K || k >= static_cast<int>(table.u.size()))
        throw MissingOrder("taylor_eval: order " + std::to_string(k) + " not in table");
    Field u = table.u[0];
    Field m = table.m[0];
    double power = 1.0;
    for (int j = 1; j <= k; ++j) {
        power *= epsilon;
        const double c = power / static_cast<double>(factorial(j));
        u.axpy(c, table.u[j]);
        m.axpy(c, table.m[j]);
    }
    return {std::move(u), std::move(m)};
}

void write_taylor_table(const TaylorTable& table, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json orders = nlohmann::json::array();
    for (int k = 0; k <= table.K; ++k) {
        const std::string uk = "u_" + std::to_string(k) + ".csv";
        const std::string mk = "m_" + std::to_string(k) + ".csv";
        write_field(dir / uk, table.u[k]);
        write_field(dir / mk, table.m[k]);
        orders.push_back({{"k", k},
                          {"u_file", uk},
                          {"m_file", mk},
                          {"u_norms", to_json(discrete_norms(table.u[k]))},
                          {"m_norms", to_json(discrete_norms(table.m[k]))}});
    }
    const nlohmann::json manifest{{"schema_version", kSchemaVersion},
                                  {"kind", "taylor_table"},
                                  {"K", table.K},
                                  {"params", to_json(table.base_params)},
                                  {"disc", to_json(table.disc)},
                                  {"orders", orders}};
    write_text(dir / "manifest.json", dump(manifest));
}

}  // namespace mfgsens
