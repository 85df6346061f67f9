#include "qstab/interp.hpp"

#include <algorithm>
#include <cmath>

namespace qstab {

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw invalid_parameter("Pchip: need >= 2 nodes");
    m_.assign(n, 0.0);
    // Classic PCHIP slope choice: weighted harmonic mean of adjacent secants.
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m_[i] = 0.0;
        } else {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
            m_[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
        }
    }
    limit_slopes();
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y, std::vector<double> dy)
    : x_(std::move(x)), y_(std::move(y)), m_(std::move(dy)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n || m_.size() != n)
        throw invalid_parameter("Pchip: inconsistent sizes");
    limit_slopes();
}

void Pchip::limit_slopes() {
    const std::size_t n = x_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        if (d == 0.0) {
            m_[i] = 0.0;
            m_[i + 1] = 0.0;
            continue;
        }
        // Fritsch-Carlson: alpha, beta in [0,3] keeps the panel monotone.
        double a = m_[i] / d, b = m_[i + 1] / d;
        if (a < 0.0) m_[i] = 0.0, a = 0.0;
        if (b < 0.0) m_[i + 1] = 0.0, b = 0.0;
        if (a > 3.0) m_[i] = 3.0 * d;
        if (b > 3.0) m_[i + 1] = 3.0 * d;
    }
}

std::size_t Pchip::locate(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

void Pchip::panel_coeffs(std::size_t i, double& c0, double& c1, double& c2,
                         double& c3) const {
    const double h = x_[i + 1] - x_[i];
    const double d = (y_[i + 1] - y_[i]) / h;
    c0 = y_[i];
    c1 = m_[i];
    c2 = (3.0 * d - 2.0 * m_[i] - m_[i + 1]) / h;
    c3 = (m_[i] + m_[i + 1] - 2.0 * d) / (h * h);
}

double Pchip::operator()(double t) const {
    const std::size_t i = locate(t);
    double c0, c1, c2, c3;
    panel_coeffs(i, c0, c1, c2, c3);
    const double s = t - x_[i];
    return c0 + s * (c1 + s * (c2 + s * c3));
}

double Pchip::derivative(double t) const {
    const std::size_t i = locate(t);
    double c0, c1, c2, c3;
    panel_coeffs(i, c0, c1, c2, c3);
    const double s = t - x_[i];
    return c1 + s * (2.0 * c2 + 3.0 * s * c3);
}

HermiteSeries::HermiteSeries(std::vector<double> x, std::vector<double> y,
                             std::vector<double> dy)
    : x_(std::move(x)), y_(std::move(y)), m_(std::move(dy)) {
    if (x_.size() < 2 || y_.size() != x_.size() || m_.size() != x_.size())
        throw invalid_parameter("HermiteSeries: inconsistent sizes");
}

std::size_t HermiteSeries::locate(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double HermiteSeries::operator()(double t) const {
    const std::size_t i = locate(t);
    const double h = x_[i + 1] - x_[i];
    const double d = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * d - 2.0 * m_[i] - m_[i + 1]) / h;
    const double c3 = (m_[i] + m_[i + 1] - 2.0 * d) / (h * h);
    const double s = t - x_[i];
    return y_[i] + s * (m_[i] + s * (c2 + s * c3));
}

double HermiteSeries::derivative(double t) const {
    const std::size_t i = locate(t);
    const double h = x_[i + 1] - x_[i];
    const double d = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * d - 2.0 * m_[i] - m_[i + 1]) / h;
    const double c3 = (m_[i] + m_[i + 1] - 2.0 * d) / (h * h);
    const double s = t - x_[i];
    return m_[i] + s * (2.0 * c2 + 3.0 * s * c3);
}

} // namespace qstab
