#include "l2m/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "l2m/kernels.hpp"

namespace l2m {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
}

namespace {

struct AxisSamples {
  std::vector<cplx> z;
  std::vector<double> w;
};

AxisSamples sample_axis(const AxisSpec& a) {
  std::vector<double> gx, gw;
  gauss_legendre(a.n_radial, gx, gw);
  AxisSamples s;
  s.z.reserve(static_cast<std::size_t>(a.n_radial * a.n_angular));
  s.w.reserve(s.z.capacity());
  const double dtheta = 2.0 * kPi / a.n_angular;
  for (int ir = 0; ir < a.n_radial; ++ir) {
    const double r = 0.5 * a.radius * (gx[static_cast<std::size_t>(ir)] + 1.0);
    // dA = r dr dtheta, dr = R/2 dx
    const double wr = 0.5 * a.radius * gw[static_cast<std::size_t>(ir)] * r * dtheta;
    for (int ia = 0; ia < a.n_angular; ++ia) {
      s.z.push_back(a.center + std::polar(r, ia * dtheta));
      s.w.push_back(wr);
    }
  }
  return s;
}

}  // namespace

GridDomain::GridDomain(std::vector<AxisSpec> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw std::invalid_argument("GridDomain: dims must be 1 or 2");
  const AxisSamples a = sample_axis(axes_[0]);
  if (axes_.size() == 1) {
    nodes_.reserve(a.z.size());
    for (const cplx& z : a.z) nodes_.push_back(Point{z, cplx{}});
    weights_ = a.w;
    return;
  }
  const AxisSamples b = sample_axis(axes_[1]);
  nodes_.reserve(a.z.size() * b.z.size());
  weights_.reserve(nodes_.capacity());
  for (std::size_t i = 0; i < a.z.size(); ++i)
    for (std::size_t j = 0; j < b.z.size(); ++j) {
      nodes_.push_back(Point{a.z[i], b.z[j]});
      weights_.push_back(a.w[i] * b.w[j]);
    }
}

double GridDomain::volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= kPi * a.radius * a.radius;
  return v;
}

double GridDomain::boundary_distance(const Point& z) const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < axes_.size(); ++k)
    d = std::min(d, axes_[k].radius - std::abs(z[k] - axes_[k].center));
  return d;
}

double GridDomain::spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& a : axes_) h = std::min(h, a.radius / a.n_radial);
  return h;
}

double GridDomain::min_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& a : axes_) r = std::min(r, a.radius);
  return r;
}

int GridDomain::radial_index(std::size_t i, int k) const {
  std::size_t local = i;
  if (dims() == 2) {
    const std::size_t n2 = static_cast<std::size_t>(axes_[1].n_radial * axes_[1].n_angular);
    local = (k == 0) ? i / n2 : i % n2;
  }
  return static_cast<int>(local / static_cast<std::size_t>(axes_[k].n_angular));
}

int GridDomain::angular_index(std::size_t i, int k) const {
  std::size_t local = i;
  if (dims() == 2) {
    const std::size_t n2 = static_cast<std::size_t>(axes_[1].n_radial * axes_[1].n_angular);
    local = (k == 0) ? i / n2 : i % n2;
  }
  return static_cast<int>(local % static_cast<std::size_t>(axes_[k].n_angular));
}

std::vector<std::size_t> GridDomain::strided_subset(int radial_stride, int angular_stride) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    bool keep = true;
    for (int k = 0; k < dims() && keep; ++k)
      keep = radial_index(i, k) % radial_stride == 0 && angular_index(i, k) % angular_stride == 0;
    if (keep) out.push_back(i);
  }
  return out;
}

std::string GridDomain::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& a : axes_)
    os << "[R=" << a.radius << ",nr=" << a.n_radial << ",na=" << a.n_angular << ",c=" << a.center.real() << ","
       << a.center.imag() << "]";
  return os.str();
}

GridDomain make_polydisc_grid(const std::vector<double>& radii, const std::vector<int>& resolution,
                              const std::vector<cplx>& centers) {
  if (radii.empty() || radii.size() > 2) throw std::invalid_argument("make_polydisc_grid: 1 or 2 radii expected");
  if (resolution.size() != 2 * radii.size())
    throw std::invalid_argument("make_polydisc_grid: resolution needs (n_radial, n_angular) per variable");
  if (!centers.empty() && centers.size() != radii.size())
    throw std::invalid_argument("make_polydisc_grid: one center per variable");
  std::vector<AxisSpec> axes;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || !std::isfinite(radii[k]))
      throw std::invalid_argument("make_polydisc_grid: radius must be positive");
    const int nr = resolution[2 * k], na = resolution[2 * k + 1];
    if (nr < 8 || na < 8) throw std::invalid_argument("make_polydisc_grid: resolution below 8");
    axes.push_back(AxisSpec{radii[k], nr, na, centers.empty() ? cplx{} : centers[k]});
  }
  return GridDomain(std::move(axes));
}

double quadrature(std::span<const double> f, const GridDomain& dom) {
  if (f.size() != dom.size()) throw std::invalid_argument("quadrature: sample count does not match grid");
  const std::size_t bad = kernels::first_non_finite(f);
  if (bad != f.size()) throw NonFiniteIntegrand(bad, f[bad]);
  return kernels::weighted_sum(f, dom.weights());
}

}  // namespace l2m
