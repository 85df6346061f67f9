#pragma once

#include <vector>

#include "qstab/common.hpp"

namespace qstab {

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson limited).
// Slopes may be supplied (e.g. a CDF with its exact density as derivative);
// they are clamped so each panel stays monotone.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    Pchip(std::vector<double> x, std::vector<double> y, std::vector<double> dy);

    double operator()(double t) const;
    double derivative(double t) const;
    std::size_t size() const { return x_.size(); }
    const std::vector<double>& abscissae() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& slopes() const { return m_; }

    // Hermite coefficients of panel i as p(s) = y_i + s*(...), s = t - x_i.
    void panel_coeffs(std::size_t i, double& c0, double& c1, double& c2, double& c3) const;

    std::size_t locate(double t) const;

  private:
    void limit_slopes();
    std::vector<double> x_, y_, m_;
};

// Plain cubic Hermite series with caller-supplied slopes, no monotonicity
// limiting. For interpolating smooth non-monotone data (e.g. Stein solutions
// together with their exact derivatives).
class HermiteSeries {
  public:
    HermiteSeries() = default;
    HermiteSeries(std::vector<double> x, std::vector<double> y, std::vector<double> dy);
    double operator()(double t) const;
    double derivative(double t) const;

  private:
    std::size_t locate(double t) const;
    std::vector<double> x_, y_, m_;
};

} // namespace qstab
