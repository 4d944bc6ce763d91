#include "nestcut/profiles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nestcut {

PbsModel estimate_pbs(const IntensityVolume& vol, Rng& rng, const PbsParams& params) {
    if (params.samplings < 1 || !(params.sample_fraction > 0.0) ||
        params.sample_fraction > 1.0 || !(params.inlier_sigmas > 0.0))
        throw std::invalid_argument("estimate_pbs: bad parameters");
    const std::int64_t n = vol.size();
    if (n == 0) throw std::invalid_argument("estimate_pbs: empty volume");

    double global_mean = 0.0;
    for (float v : vol.data) global_mean += v;
    global_mean /= static_cast<double>(n);

    std::vector<std::int64_t> candidates;
    for (std::int64_t i = 0; i < n; ++i)
        if (vol.data[static_cast<std::size_t>(i)] < global_mean) candidates.push_back(i);
    if (candidates.empty())
        throw std::runtime_error("estimate_pbs: no voxels below the global mean");

    const double floor = sigma_floor(vol);
    const std::size_t draw =
        static_cast<std::size_t>(std::ceil(params.sample_fraction * static_cast<double>(candidates.size())));

    std::int64_t best_count = -1;
    PbsModel best;
    std::vector<std::pair<double, std::int64_t>> keys(candidates.size());
    std::vector<std::int64_t> picked;
    for (int s = 0; s < params.samplings; ++s) {
        // weighted sampling without replacement: each candidate gets the key
        // log(u)/w with weight w = distance below the global mean; the top
        // keys form the sample
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const double w =
                global_mean - vol.data[static_cast<std::size_t>(candidates[i])];
            double u = rng.next_double();
            while (u <= 0.0) u = rng.next_double();
            keys[i] = {std::log(u) / w, candidates[i]};
        }
        const std::size_t k = std::min(draw, keys.size());
        std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k) - 1,
                         keys.end(), [](const auto& a, const auto& b) {
                             return a.first > b.first ||
                                    (a.first == b.first && a.second < b.second);
                         });
        picked.clear();
        for (std::size_t i = 0; i < k; ++i) picked.push_back(keys[i].second);
        std::sort(picked.begin(), picked.end());  // fixed accumulation order

        double sum = 0.0, sumsq = 0.0;
        for (std::int64_t i : picked) {
            const double v = vol.data[static_cast<std::size_t>(i)];
            sum += v;
            sumsq += v * v;
        }
        const double mu = sum / static_cast<double>(picked.size());
        const double sd =
            std::sqrt(std::max(0.0, sumsq / static_cast<double>(picked.size()) - mu * mu));
        const double tol = params.inlier_sigmas * sd;

        std::int64_t cnt = 0;
        double isum = 0.0, isumsq = 0.0;
        for (std::int64_t i : candidates) {
            const double v = vol.data[static_cast<std::size_t>(i)];
            if (std::abs(v - mu) <= tol) {
                ++cnt;
                isum += v;
                isumsq += v * v;
            }
        }
        if (cnt > best_count) {
            best_count = cnt;
            best.mean = isum / static_cast<double>(cnt);
            best.stddev = std::max(
                std::sqrt(std::max(0.0, isumsq / static_cast<double>(cnt) -
                                            best.mean * best.mean)),
                floor);
        }
    }
    return best;
}

DepthStats depth_stats(const IntensityVolume& vol, const BinaryMask& fat_mask,
                       const BinaryMask& lnp_mask, std::int64_t min_count) {
    if (vol.dims != fat_mask.dims || vol.dims != lnp_mask.dims)
        throw std::invalid_argument("depth_stats: dims differ");
    const Dims3 d = vol.dims;
    const int axis = vol.depth_axis;
    const int extent = d[axis];
    std::vector<std::array<double, 2>> sum(static_cast<std::size_t>(extent), {0.0, 0.0});
    std::vector<std::array<double, 2>> sumsq(static_cast<std::size_t>(extent), {0.0, 0.0});
    std::vector<std::array<std::int64_t, 2>> cnt(static_cast<std::size_t>(extent), {0, 0});

    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                const bool fat = fat_mask.data[static_cast<std::size_t>(p)] != 0;
                const bool lnp = lnp_mask.data[static_cast<std::size_t>(p)] != 0;
                if (!fat && !lnp) continue;
                const int cls = fat ? 1 : 0;
                const int dep = axis == 0 ? x : axis == 1 ? y : z;
                const double v = vol.data[static_cast<std::size_t>(p)];
                sum[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)] += v;
                sumsq[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)] += v * v;
                ++cnt[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)];
            }

    DepthStats out;
    for (int dep = 0; dep < extent; ++dep)
        for (int cls = 0; cls < 2; ++cls) {
            const std::int64_t c = cnt[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)];
            if (c < min_count) continue;
            const double mu =
                sum[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)] / static_cast<double>(c);
            const double var = std::max(
                0.0, sumsq[static_cast<std::size_t>(dep)][static_cast<std::size_t>(cls)] /
                             static_cast<double>(c) -
                         mu * mu);
            DepthSample row{dep, mu, std::sqrt(var), c};
            (cls == 1 ? out.fat : out.lnp).push_back(row);
        }
    return out;
}

namespace {

// clamped uniform cubic B-spline over [lo, hi] with `segments` spans
struct Spline {
    double lo = 0.0, hi = 1.0;
    int segments = 1;
    Eigen::VectorXd coef;

    int ncoef() const { return segments + 3; }

    // Cox-de Boor basis values at x (clamped); returns ncoef weights, at
    // most 4 of them nonzero
    void basis(double x, Eigen::VectorXd& w) const {
        const int p = 3;
        const int m = ncoef();
        w.setZero(m);
        x = std::clamp(x, lo, hi);
        // knot vector: lo repeated 4 times, interior, hi repeated 4 times
        auto knot = [&](int i) {
            if (i <= p) return lo;
            if (i >= m) return hi;
            return lo + (hi - lo) * static_cast<double>(i - p) / segments;
        };
        int span = p + static_cast<int>((x - lo) / (hi - lo) * segments);
        span = std::min(span, m - 1);
        double left[4], right[4], nvals[4];
        nvals[0] = 1.0;
        for (int j = 1; j <= p; ++j) {
            left[j] = x - knot(span + 1 - j);
            right[j] = knot(span + j) - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double den = right[r + 1] + left[j - r];
                const double tmp = den != 0.0 ? nvals[r] / den : 0.0;
                nvals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            nvals[j] = saved;
        }
        for (int j = 0; j <= p; ++j) {
            const int idx = span - p + j;
            if (idx >= 0 && idx < m) w[idx] = nvals[j];
        }
    }

    double eval(double x) const {
        Eigen::VectorXd w;
        basis(x, w);
        return w.dot(coef);
    }
};

Spline fit_ls(const std::vector<double>& xs, const std::vector<double>& ys, double lo, double hi,
              int segments) {
    Spline sp;
    sp.lo = lo;
    sp.hi = hi;
    sp.segments = segments;
    const int m = sp.ncoef();
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd aty = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd w;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sp.basis(xs[i], w);
        ata.noalias() += w * w.transpose();
        aty.noalias() += w * ys[i];
    }
    const double ridge = 1e-8 * (ata.trace() / m + 1.0);
    ata.diagonal().array() += ridge;
    sp.coef = ata.llt().solve(aty);
    return sp;
}

struct SeriesRow {
    int depth;
    double value;
    double se;  // standard error used for the inlier band
};

// robust spline through (depth, value) rows; returns the smoothed value at
// every integer depth in [0, extent), constant beyond the observed range
std::vector<double> fit_series(const std::vector<SeriesRow>& rows, int extent, Rng& rng,
                               const ProfileFitParams& params) {
    const int n = static_cast<int>(rows.size());
    if (n < 4) throw std::runtime_error("profile fit: fewer than 4 usable depth rows");
    const double lo = rows.front().depth, hi = rows.back().depth;
    int segments = std::max(1, static_cast<int>(std::llround((hi - lo) / params.knot_spacing)));
    while (segments > 1 && segments + 3 > n) --segments;

    auto fit_subset = [&](const std::vector<int>& idx) {
        std::vector<double> xs, ys;
        xs.reserve(idx.size());
        ys.reserve(idx.size());
        for (int i : idx) {
            xs.push_back(rows[static_cast<std::size_t>(i)].depth);
            ys.push_back(rows[static_cast<std::size_t>(i)].value);
        }
        return fit_ls(xs, ys, lo, hi, segments);
    };

    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);

    const int m = std::max({4, segments + 3,
                            static_cast<int>(std::ceil(params.sample_fraction * n))});
    std::vector<int> best_inliers;
    if (m >= n) {
        best_inliers = all;
    } else {
        std::vector<int> perm;
        std::vector<int> inliers;
        for (int iter = 0; iter < params.ransac_iters; ++iter) {
            perm = all;
            for (int i = 0; i < m; ++i) {
                const std::size_t j =
                    static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(n - i)));
                std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
            }
            std::vector<int> sample(perm.begin(), perm.begin() + m);
            std::sort(sample.begin(), sample.end());
            const Spline sp = fit_subset(sample);
            inliers.clear();
            for (int i = 0; i < n; ++i) {
                const SeriesRow& r = rows[static_cast<std::size_t>(i)];
                if (std::abs(sp.eval(r.depth) - r.value) <= params.inlier_band * r.se)
                    inliers.push_back(i);
            }
            if (inliers.size() > best_inliers.size()) best_inliers = inliers;
        }
        if (static_cast<int>(best_inliers.size()) < 4) best_inliers = all;
    }

    const Spline sp = fit_subset(best_inliers);
    std::vector<double> out(static_cast<std::size_t>(extent));
    for (int dep = 0; dep < extent; ++dep)
        out[static_cast<std::size_t>(dep)] = sp.eval(std::clamp(static_cast<double>(dep), lo, hi));
    return out;
}

}  // namespace

DepthProfile fit_profile(const DepthStats& stats, const IntensityVolume& vol, Rng& rng,
                         const ProfileFitParams& params) {
    if (params.knot_spacing < 1 || params.ransac_iters < 1 ||
        !(params.sample_fraction > 0.0) || params.sample_fraction > 1.0 ||
        !(params.inlier_band > 0.0))
        throw std::invalid_argument("fit_profile: bad parameters");
    const int extent = vol.dims[vol.depth_axis];

    auto rows_mu = [](const std::vector<DepthSample>& src) {
        std::vector<SeriesRow> rows;
        for (const DepthSample& s : src)
            rows.push_back({s.depth, s.mean, s.stddev / std::sqrt(static_cast<double>(s.count))});
        return rows;
    };
    auto rows_sigma = [](const std::vector<DepthSample>& src) {
        std::vector<SeriesRow> rows;
        for (const DepthSample& s : src)
            rows.push_back({s.depth, s.stddev, s.stddev / std::sqrt(static_cast<double>(s.count))});
        return rows;
    };

    DepthProfile prof;
    prof.mu_lnp = fit_series(rows_mu(stats.lnp), extent, rng, params);
    prof.sigma_lnp = fit_series(rows_sigma(stats.lnp), extent, rng, params);
    prof.mu_fat = fit_series(rows_mu(stats.fat), extent, rng, params);
    prof.sigma_fat = fit_series(rows_sigma(stats.fat), extent, rng, params);

    const double floor = sigma_floor(vol);
    float vmin = vol.data.empty() ? 0.0f : vol.data[0], vmax = vmin;
    for (float v : vol.data) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double eps = std::max(0.01 * (static_cast<double>(vmax) - vmin), 1e-12);
    for (int dep = 0; dep < extent; ++dep) {
        auto& sl = prof.sigma_lnp[static_cast<std::size_t>(dep)];
        auto& sf = prof.sigma_fat[static_cast<std::size_t>(dep)];
        sl = std::max(sl, floor);
        sf = std::max(sf, floor);
        auto& mf = prof.mu_fat[static_cast<std::size_t>(dep)];
        const double ml = prof.mu_lnp[static_cast<std::size_t>(dep)];
        mf = std::max(mf, ml + eps);  // shell stays brighter than core
    }
    return prof;
}

}  // namespace nestcut
