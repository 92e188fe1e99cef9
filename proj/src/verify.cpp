#include "flowforge/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "flowforge/serialize.hpp"

namespace flowforge {

std::string ErrorReport::csv_row() const {
    std::string p_text = std::isinf(p) ? "inf" : fmt_double(p);
    return metric + "," + p_text + "," + fmt_double(value) + "," + std::to_string(points) + "," +
           std::to_string(seed);
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
    // splitmix64 finalizer over a seed-offset counter stream.
    std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + uniform(counter) * (hi - lo);
}

namespace {

std::size_t worker_count(std::size_t n) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("FLOWFORGE_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(cap));
    }
    return std::min(hw, std::max<std::size_t>(n / 16, 1));
}

} // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = n == 0 ? 1 : worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

Vec integrate_rk4(const FieldFn& field, Vec x0, double t0, double t1, int steps,
                  const std::vector<double>& breakpoints) {
    if (steps < 1) fail(Err::DimensionMismatch, "integrate_rk4: steps must be >= 1");
    if (t1 < t0) fail(Err::TimeOutOfRange, "integrate_rk4: t1 < t0");
    if (t1 == t0) return x0;

    std::vector<double> cuts{t0};
    for (double b : breakpoints)
        if (b > t0 && b < t1) cuts.push_back(b);
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());

    const double total = t1 - t0;
    Vec x = std::move(x0);
    const std::size_t d = x.size();
    Vec k1, k2, k3, k4, tmp(d);
    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double a = cuts[seg], b = cuts[seg + 1];
        if (b <= a) continue;
        const int m = std::max(1, static_cast<int>(std::ceil(steps * (b - a) / total)));
        const double h = (b - a) / m;
        // Right-continuous fields switch pieces exactly at b; keep every stage
        // query strictly inside the active piece.
        const double t_hi = std::nextafter(b, a);
        for (int s = 0; s < m; ++s) {
            const double t = a + s * h;
            const double t_mid = std::min(t + 0.5 * h, t_hi);
            k1 = field(x, t);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
            k2 = field(tmp, t_mid);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
            k3 = field(tmp, t_mid);
            for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
            k4 = field(tmp, std::min(t + h, t_hi));
            for (std::size_t i = 0; i < d; ++i)
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    if (!all_finite(x)) fail(Err::NonFiniteState, "integrate_rk4: trajectory diverged");
    return x;
}

namespace {

FieldFn step_field(const PrimitiveField& f) {
    switch (f.kind) {
        case FieldKind::Affine:
            return [&f](const Vec& x, double) {
                Vec v = matvec(f.A, x);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += f.b[i];
                return v;
            };
        case FieldKind::ReLU:
            return [](const Vec& x, double) {
                Vec v = x;
                for (double& u : v) u = std::max(u, 0.0);
                return v;
            };
        case FieldKind::NegReLU:
            return [](const Vec& x, double) {
                Vec v = x;
                for (double& u : v) u = -std::max(u, 0.0);
                return v;
            };
    }
    fail(Err::DimensionMismatch, "unknown field kind");
}

} // namespace

Vec rk4_program(const FlowProgram& prog, Vec x, int steps_per_step) {
    for (const FlowStep& s : prog.steps) {
        if (s.duration == 0.0) continue;
        x = integrate_rk4(step_field(s.field), std::move(x), 0.0, s.duration, steps_per_step);
    }
    return x;
}

std::vector<Vec> grid_points(const BoxDomain& k, std::size_t per_axis) {
    k.check();
    const std::size_t d = k.dim();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= per_axis;
    std::vector<Vec> pts;
    pts.reserve(total);
    Vec x(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t axis = 0; axis < d; ++axis) {
            const std::size_t pos = rem % per_axis;
            rem /= per_axis;
            x[axis] = per_axis == 1
                          ? 0.5 * (k.lo[axis] + k.hi[axis])
                          : k.lo[axis] + (k.hi[axis] - k.lo[axis]) * static_cast<double>(pos) /
                                             static_cast<double>(per_axis - 1);
        }
        pts.push_back(x);
    }
    return pts;
}

std::size_t default_points_per_axis(std::size_t d) {
    if (d <= 1) return 101;
    if (d == 2) return 15;
    if (d == 3) return 7;
    return 0; // d >= 4: callers switch to Monte Carlo sampling
}

std::vector<Vec> sample_points(const BoxDomain& k, std::size_t n, std::uint64_t seed) {
    k.check();
    const std::size_t d = k.dim();
    CounterRng rng{seed};
    std::vector<Vec> pts(n, Vec(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t axis = 0; axis < d; ++axis)
            pts[i][axis] = rng.uniform(i * d + axis, k.lo[axis], k.hi[axis]);
    return pts;
}

ErrorReport sup_error_points(const MapFn& a, const MapFn& b, const std::vector<Vec>& pts) {
    std::vector<double> gaps(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
        const Vec ya = a(pts[i]);
        const Vec yb = b(pts[i]);
        double g = 0.0;
        for (std::size_t c = 0; c < ya.size(); ++c) g = std::max(g, std::fabs(ya[c] - yb[c]));
        gaps[i] = g;
    });
    ErrorReport rep;
    rep.metric = "sup";
    rep.p = std::numeric_limits<double>::infinity();
    rep.points = pts.size();
    rep.seed = 0;
    for (double g : gaps) rep.value = std::max(rep.value, g);
    return rep;
}

ErrorReport sup_error(const MapFn& a, const MapFn& b, const BoxDomain& k, std::size_t per_axis) {
    return sup_error_points(a, b, grid_points(k, per_axis));
}

ErrorReport lp_error(const MapFn& a, const MapFn& b, const BoxDomain& k, double p,
                     std::size_t n_samples, std::uint64_t seed) {
    if (p < 1.0) fail(Err::DimensionMismatch, "lp_error: p must be >= 1");
    if (n_samples < 1) fail(Err::DimensionMismatch, "lp_error: n_samples must be >= 1");
    const std::vector<Vec> pts = sample_points(k, n_samples, seed);
    std::vector<double> powers(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
        const Vec ya = a(pts[i]);
        const Vec yb = b(pts[i]);
        double g = 0.0;
        for (std::size_t c = 0; c < ya.size(); ++c) g = std::max(g, std::fabs(ya[c] - yb[c]));
        powers[i] = std::pow(g, p);
    });
    // Fixed-order reduction keeps the estimate bit-reproducible.
    double mean = 0.0;
    for (double v : powers) mean += v;
    mean /= static_cast<double>(pts.size());

    ErrorReport rep;
    rep.metric = "lp";
    rep.p = p;
    rep.value = std::pow(k.volume() * mean, 1.0 / p);
    rep.points = n_samples;
    rep.seed = seed;
    return rep;
}

double gronwall_delta(double eps, double tau, double L) {
    return std::min(1.0, eps / (tau * std::exp(L * tau)));
}

BoxDomain inflate_domain(const BoxDomain& k, double tau, double L, double V) {
    return k.inflated((V + 1.0) * tau * std::exp(L * tau));
}

double jacobian_det(const MapFn& map, const Vec& x, double h) {
    const std::size_t d = x.size();
    Matrix jac(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        Vec xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vec yp = map(xp);
        const Vec ym = map(xm);
        if (!all_finite(yp) || !all_finite(ym)) fail(Err::SingularStencil, "non-finite stencil values");
        for (std::size_t r = 0; r < d; ++r) jac(r, c) = (yp[r] - ym[r]) / (2.0 * h);
    }
    return det(jac);
}

bool convexity_check_1d(const MapFn& map, double lo, double hi, std::size_t n_grid) {
    if (n_grid < 3) fail(Err::DimensionMismatch, "convexity_check_1d: need at least 3 points");
    std::vector<double> y(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
        y[i] = map(Vec{x})[0];
    }
    for (std::size_t i = 1; i + 1 < n_grid; ++i)
        if (y[i + 1] - 2.0 * y[i] + y[i - 1] < -1e-8) return false;
    return true;
}

} // namespace flowforge
