#include "mfgsens/grid.hpp"

#include "mfgsens/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mfgsens {

Discretization Discretization::make(double L, double T, int Nx, int Nt) {
    Discretization d{L, T, Nx, Nt};
    d.validate();
    return d;
}

void Discretization::validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidInput("disc.L must be > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("disc.T must be > 0");
    if (Nx < 8) throw InvalidInput("disc.Nx must be >= 8");
    if (Nt < 8) throw InvalidInput("disc.Nt must be >= 8");
}

Discretization Discretization::refined(int factor) const {
    return make(L, T, Nx * factor, Nt * factor);
}

Field::Field(const Discretization& disc, double fill)
    : disc_(disc), data_(disc.steps() * disc.nodes(), fill) {}

bool Field::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require_same_shape(const Field& a, const Field& b) {
    if (!(a.disc() == b.disc())) throw InvalidInput("field shapes differ");
}

}  // namespace

Field& Field::operator+=(const Field& other) { return axpy(1.0, other); }
Field& Field::operator-=(const Field& other) { return axpy(-1.0, other); }

Field& Field::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Field& Field::axpy(double s, const Field& other) {
    require_same_shape(*this, other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * other.data_[k];
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double sup_distance(const Field& a, const Field& b) {
    require_same_shape(a, b);
    double d = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t k = 0; k < va.size(); ++k) d = std::max(d, std::abs(va[k] - vb[k]));
    return d;
}

double sup_abs(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double sup_abs(const Field& f) noexcept { return sup_abs(f.values()); }

namespace {

// vertex height of the parabola through (-1, a), (0, c), (1, e); c itself when not a maximum
double parabola_peak(double a, double c, double e) noexcept {
    const double curv = a - 2.0 * c + e;
    if (!(curv < 0.0)) return c;
    const double s = 0.5 * (a - e) / curv;
    if (std::abs(s) > 1.0) return c;
    return c - 0.25 * (a - e) * s;
}

}  // namespace

double sup_abs_refined(const Field& f) noexcept {
    const Discretization& d = f.disc();
    int bn = 0, bi = 0;
    double best = -1.0;
    for (int n = 0; n <= d.Nt; ++n)
        for (int i = 0; i <= d.Nx; ++i)
            if (std::abs(f(n, i)) > best) {
                best = std::abs(f(n, i));
                bn = n;
                bi = i;
            }
    auto along_x = [&](int n) {
        if (bi == 0 || bi == d.Nx) return std::abs(f(n, bi));
        return parabola_peak(std::abs(f(n, bi - 1)), std::abs(f(n, bi)), std::abs(f(n, bi + 1)));
    };
    if (bn == 0 || bn == d.Nt) return along_x(bn);
    return parabola_peak(along_x(bn - 1), along_x(bn), along_x(bn + 1));
}

double trapezoid(std::span<const double> row, const Discretization& disc) {
    if (row.size() != disc.nodes()) throw InvalidInput("trapezoid: row length != Nx+1");
    double s = 0.5 * (row.front() + row.back());
    for (std::size_t i = 1; i + 1 < row.size(); ++i) s += row[i];
    return s * disc.dx();
}

Row diff_x(std::span<const double> row, const Discretization& disc) {
    if (row.size() != disc.nodes()) throw InvalidInput("diff_x: row length != Nx+1");
    const std::size_t n = row.size();
    const double inv2h = 0.5 / disc.dx();
    Row d(n);
    d[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (row[i + 1] - row[i - 1]) * inv2h;
    d[n - 1] = (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) * inv2h;
    return d;
}

Field diff_x(const Field& f) {
    const auto& disc = f.disc();
    Field out(disc);
    for (int n = 0; n <= disc.Nt; ++n) {
        Row d = diff_x(f.row(n), disc);
        std::copy(d.begin(), d.end(), out.row(n).begin());
    }
    return out;
}

NormTriple discrete_norms(const Field& f) {
    const auto& disc = f.disc();
    NormTriple nt;
    for (int n = 0; n <= disc.Nt; ++n) {
        auto row = f.row(n);
        Row d1 = diff_x(row, disc);
        Row d2 = diff_x(d1, disc);
        nt.sup_val = std::max(nt.sup_val, sup_abs(row));
        nt.sup_dx = std::max(nt.sup_dx, sup_abs(d1));
        nt.sup_dxx = std::max(nt.sup_dxx, sup_abs(d2));
    }
    return nt;
}

void write_field_csv(std::ostream& os, const Field& f) {
    const auto& disc = f.disc();
    os << "t,x,value\n";
    char buf[96];
    for (int n = 0; n <= disc.Nt; ++n) {
        for (int i = 0; i <= disc.Nx; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", disc.t(n), disc.x(i), f(n, i));
            os << buf;
        }
    }
}

Field read_field_csv(std::istream& is, const Discretization& disc) {
    std::string line;
    if (!std::getline(is, line) || line != "t,x,value")
        throw InvalidInput("field csv: missing header t,x,value");
    Field f(disc);
    auto vals = f.values();
    std::size_t k = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (k >= vals.size()) throw InvalidInput("field csv: too many rows");
        auto last = line.rfind(',');
        if (last == std::string::npos) throw InvalidInput("field csv: malformed row");
        vals[k++] = std::stod(line.substr(last + 1));
    }
    if (k != vals.size()) throw InvalidInput("field csv: row count does not match grid");
    return f;
}

}  // namespace mfgsens
