#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mfgsens {

using Row = std::vector<double>;

/// Uniform space-time grid on [0, L] x [0, T].
///
/// Nodes are x_i = i*dx for i = 0..Nx and t_n = n*dt for n = 0..Nt.
struct Discretization {
    double L = 12.0;
    double T = 1.0;
    int Nx = 240;
    int Nt = 240;

    /// Validating constructor; throws InvalidInput if Nx < 8, Nt < 8 or L, T <= 0.
    static Discretization make(double L, double T, int Nx, int Nt);

    void validate() const;

    double dx() const noexcept { return L / Nx; }
    double dt() const noexcept { return T / Nt; }
    double x(int i) const noexcept { return i * dx(); }
    double t(int n) const noexcept { return n * dt(); }
    std::size_t nodes() const noexcept { return static_cast<std::size_t>(Nx) + 1; }
    std::size_t steps() const noexcept { return static_cast<std::size_t>(Nt) + 1; }

    /// Same domain with both counts multiplied by `factor`.
    Discretization refined(int factor) const;

    friend bool operator==(const Discretization&, const Discretization&) = default;
};

/// Time-indexed family of spatial rows, (Nt+1) x (Nx+1), row-major in time.
class Field {
public:
    Field() = default;
    explicit Field(const Discretization& disc, double fill = 0.0);

    const Discretization& disc() const noexcept { return disc_; }

    double& operator()(int n, int i) noexcept { return data_[index(n, i)]; }
    double operator()(int n, int i) const noexcept { return data_[index(n, i)]; }

    std::span<double> row(int n) noexcept { return {data_.data() + index(n, 0), disc_.nodes()}; }
    std::span<const double> row(int n) const noexcept {
        return {data_.data() + index(n, 0), disc_.nodes()};
    }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    bool all_finite() const noexcept;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s) noexcept;

    /// this += s * other
    Field& axpy(double s, const Field& other);

private:
    std::size_t index(int n, int i) const noexcept {
        return static_cast<std::size_t>(n) * disc_.nodes() + static_cast<std::size_t>(i);
    }

    Discretization disc_{};
    std::vector<double> data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Largest |a - b| over all nodes.
double sup_distance(const Field& a, const Field& b);
double sup_abs(std::span<const double> v) noexcept;
double sup_abs(const Field& f) noexcept;
/// sup |f| with the discrete peak refined by a parabola through its neighbours in x, then in t.
/// Removes the O(h^2) jitter of where the peak falls between nodes.
double sup_abs_refined(const Field& f) noexcept;

/// Discrete proxy for the parabolic Hoelder norm: sup of |f|, |f_x| and |f_xx|.
struct NormTriple {
    double sup_val = 0.0;
    double sup_dx = 0.0;
    double sup_dxx = 0.0;
};

/// Trapezoid rule over [0, L].
double trapezoid(std::span<const double> row, const Discretization& disc);

/// Centered differences inside, second-order one-sided stencils at both ends.
Row diff_x(std::span<const double> row, const Discretization& disc);

NormTriple discrete_norms(const Field& f);

/// Applies diff_x to every time row.
Field diff_x(const Field& f);

/// CSV with header `t,x,value`, row-major over (n, i), 17 significant digits.
void write_field_csv(std::ostream& os, const Field& f);
Field read_field_csv(std::istream& is, const Discretization& disc);

}  // namespace mfgsens
