#include "nrmpp/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>

namespace nrmpp {

SignedLogReal SignedLogReal::from_double(double v) {
  if (v == 0.0) return zero();
  return {std::log(std::fabs(v)), v > 0 ? 1 : -1};
}

double SignedLogReal::value() const {
  return sign == 0 ? 0.0 : sign * std::exp(log_magnitude);
}

SignedLogReal operator+(const SignedLogReal& a, const SignedLogReal& b) {
  if (a.sign == 0) return b;
  if (b.sign == 0) return a;
  const SignedLogReal& hi = a.log_magnitude >= b.log_magnitude ? a : b;
  const SignedLogReal& lo = a.log_magnitude >= b.log_magnitude ? b : a;
  const double d = lo.log_magnitude - hi.log_magnitude;
  if (hi.sign == lo.sign) return {hi.log_magnitude + std::log1p(std::exp(d)), hi.sign};
  const double r = -std::expm1(d);  // 1 - exp(d)
  if (r <= 0.0) return SignedLogReal::zero();
  return {hi.log_magnitude + std::log(r), hi.sign};
}

SignedLogReal operator*(const SignedLogReal& a, double b) {
  if (a.sign == 0 || b == 0.0) return SignedLogReal::zero();
  return {a.log_magnitude + std::log(std::fabs(b)), b > 0 ? a.sign : -a.sign};
}

SignedLogReal gfc(long n, long k, double alpha) {
  if (n < 0 || k < 0) throw std::invalid_argument("gfc: n and k must be non-negative");
  if (n > 10000) throw std::invalid_argument("gfc: n exceeds 10^4");
  if (k > n) return SignedLogReal::zero();
  if (n == 0) return {0.0, 1};
  // rolling rows C(i, 0..k)
  std::vector<SignedLogReal> prev(k + 1, SignedLogReal::zero()), cur(k + 1);
  prev[0] = {0.0, 1};
  for (long i = 1; i <= n; ++i) {
    const long jmax = std::min(i, k);
    cur[0] = SignedLogReal::zero();
    for (long j = 1; j <= jmax; ++j) {
      SignedLogReal t1 = prev[j - 1] * alpha;
      SignedLogReal t2 = j <= i - 1 ? prev[j] * (j * alpha - static_cast<double>(i) + 1.0)
                                    : SignedLogReal::zero();
      cur[j] = t1 + t2;
    }
    for (long j = jmax + 1; j <= k; ++j) cur[j] = SignedLogReal::zero();
    std::swap(prev, cur);
  }
  return prev[k];
}

std::uint64_t bell(int k) {
  if (k < 0) throw std::invalid_argument("bell: negative k");
  if (k > 25) throw std::invalid_argument("bell: k too large (max 25)");
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < k; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

double stirling2(int k, int j) {
  if (k < 0 || j < 0) throw std::invalid_argument("stirling2: negative argument");
  std::vector<double> row(j + 1, 0.0);
  row[0] = 1.0;
  for (int i = 1; i <= k; ++i) {
    for (int m = std::min(i, j); m >= 1; --m) row[m] = m * row[m] + row[m - 1];
    row[0] = 0.0;
  }
  return row[j];
}

double log_pochhammer(double alpha, long n) {
  if (!(alpha > 0.0)) throw std::invalid_argument("log_pochhammer: alpha must be positive");
  if (n < 0) throw std::invalid_argument("log_pochhammer: negative n");
  if (n == 0) return 0.0;
  if (n <= 32) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += std::log(alpha + i);
    return s;
  }
  return std::lgamma(alpha + n) - std::lgamma(alpha);
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3], absk = std::fabs(k);
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x), f2 = f(c + x);
    k += kWgk[j] * (f1 + f2);
    absk += kWgk[j] * (std::fabs(f1) + std::fabs(f2));
    if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
  }
  k *= h;
  g *= h;
  absk *= std::fabs(h);
  double err = std::fabs(k - g);
  // roundoff floor
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * absk);
  if (!std::isfinite(k)) throw std::runtime_error("integral did not converge");
  return {a, b, k, err};
}

}  // namespace

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("integrate: rel_tol must be positive");
  const int max_pieces = 4000;
  std::priority_queue<Piece> queue;
  Piece first = gk15(f, a, b);
  double total = first.value, total_err = first.error;
  queue.push(first);
  const double floor_tol = 100.0 * std::numeric_limits<double>::epsilon();
  int pieces = 1;
  while (total_err > std::max(rel_tol, floor_tol) * std::fabs(total) && total_err > 1e-300) {
    if (pieces >= max_pieces) throw std::runtime_error("integral did not converge");
    Piece p = queue.top();
    queue.pop();
    const double mid = 0.5 * (p.a + p.b);
    Piece l = gk15(f, p.a, mid), r = gk15(f, mid, p.b);
    total += l.value + r.value - p.value;
    total_err += l.error + r.error - p.error;
    queue.push(l);
    queue.push(r);
    pieces += 1;
    if (total_err <= floor_tol * std::fabs(total) * pieces) break;
  }
  // recompute sums to shed accumulated drift
  double s = 0.0;
  while (!queue.empty()) {
    s += queue.top().value;
    queue.pop();
  }
  return s;
}

double integrate_halfline(const std::function<double(double)>& f, double rel_tol) {
  auto g = [&f](double t) {
    if (t >= 1.0) return 0.0;
    const double om = 1.0 - t;
    const double u = t / om;
    const double v = f(u);
    if (v == 0.0) return 0.0;
    return v / (om * om);
  };
  return integrate_interval(g, 0.0, 1.0, rel_tol);
}

void gauss_legendre(int m, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: m < 1");
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = c - h * x;
    nodes[m - 1 - i] = c + h * x;
    weights[i] = weights[m - 1 - i] = w * h;
  }
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void for_each_set_partition(int k,
                            const std::function<void(const std::vector<int>&, int)>& visit) {
  if (k < 0) throw std::invalid_argument("for_each_set_partition: negative k");
  if (k == 0) {
    visit({}, 0);
    return;
  }
  std::vector<int> a(k, 0), mx(k, 0);  // mx[i] = max(a[0..i-1])
  while (true) {
    int nb = 0;
    for (int v : a) nb = std::max(nb, v + 1);
    visit(a, nb);
    int i = k - 1;
    while (i > 0 && a[i] == mx[i] + 1) --i;
    if (i == 0) return;
    a[i] += 1;
    for (int j = i + 1; j < k; ++j) {
      a[j] = 0;
      mx[j] = std::max(mx[j - 1], a[j - 1]);
    }
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace nrmpp
