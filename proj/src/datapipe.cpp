#include "ascl/datapipe.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ascl/binio.hpp"

namespace ascl {

namespace {

constexpr std::string_view kDatasetMagic = "ASCLDATA";
constexpr std::uint32_t kDatasetVersion = 1;
constexpr double kPi = 3.14159265358979323846;

enum Stream : std::uint64_t { kPermutation = 0, kAugment = 1 };
enum Branch : std::uint64_t { kQueryBranch = 0, kTargetBranch = 1 };

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
Mat random_rotation(std::size_t dim, Rng& rng) {
    Mat q(dim, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        Vec v(dim);
        for (;;) {
            for (double& x : v) {
                x = rng.normal();
            }
            for (std::size_t p = 0; p < c; ++p) {
                double proj = 0.0;
                for (std::size_t r = 0; r < dim; ++r) {
                    proj += q(r, p) * v[r];
                }
                for (std::size_t r = 0; r < dim; ++r) {
                    v[r] -= proj * q(r, p);
                }
            }
            if (l2_norm(v) > 1e-8) {
                break;
            }
        }
        const Vec u = l2_normalize(v);
        for (std::size_t r = 0; r < dim; ++r) {
            q(r, c) = u[r];
        }
    }
    return q;
}

}  // namespace

void Dataset::validate() const {
    require(labels.size() == samples.rows, ErrorCode::InvalidArgument,
            "dataset: label count differs from sample count");
    require(all_finite(samples.values), ErrorCode::InvalidArgument, "dataset: non-finite sample");
    for (std::int32_t l : labels) {
        require(l >= 0 && static_cast<std::uint32_t>(l) < num_classes, ErrorCode::InvalidArgument,
                "dataset: label out of range");
    }
}

Dataset gen_gaussian_clusters(std::uint32_t num_classes, std::size_t per_class, std::size_t dim,
                              double separation, Rng& rng) {
    require(num_classes >= 1 && per_class >= 1 && dim >= 1, ErrorCode::InvalidArgument,
            "gen_gaussian_clusters: counts must be >= 1");
    require(separation >= 0.0, ErrorCode::InvalidArgument,
            "gen_gaussian_clusters: separation must be non-negative");
    Mat centers(num_classes, dim);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        Vec v(dim);
        do {
            for (double& x : v) {
                x = rng.normal();
            }
        } while (l2_norm(v) == 0.0);
        const Vec u = l2_normalize(v);
        for (std::size_t k = 0; k < dim; ++k) {
            centers(c, k) = separation * u[k];
        }
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.samples = Mat(num_classes * per_class, dim);
    ds.labels.resize(num_classes * per_class);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t r = c * per_class + i;
            for (std::size_t k = 0; k < dim; ++k) {
                ds.samples(r, k) = centers(c, k) + rng.normal();
            }
            ds.labels[r] = static_cast<std::int32_t>(c);
        }
    }
    ds.metadata = {{"generator", "gaussian_clusters"},
                   {"classes", std::to_string(num_classes)},
                   {"per_class", std::to_string(per_class)},
                   {"dim", std::to_string(dim)},
                   {"separation", fmt_double(separation)}};
    return ds;
}

Dataset two_moons_planar(std::size_t per_class, double noise_sigma, Rng& rng) {
    require(per_class >= 1, ErrorCode::InvalidArgument, "two_moons: per_class must be >= 1");
    require(noise_sigma >= 0.0, ErrorCode::InvalidArgument, "two_moons: noise must be >= 0");
    Dataset ds;
    ds.num_classes = 2;
    ds.samples = Mat(2 * per_class, 2);
    ds.labels.resize(2 * per_class);
    const double step = per_class > 1 ? kPi / static_cast<double>(per_class - 1) : 0.0;
    for (std::size_t i = 0; i < per_class; ++i) {
        const double t = step * static_cast<double>(i);
        ds.samples(i, 0) = std::cos(t);
        ds.samples(i, 1) = std::sin(t);
        ds.labels[i] = 0;
        const std::size_t j = per_class + i;
        ds.samples(j, 0) = 1.0 - std::cos(t);
        ds.samples(j, 1) = 0.5 - std::sin(t);
        ds.labels[j] = 1;
    }
    if (noise_sigma > 0.0) {
        for (double& v : ds.samples.values) {
            v += noise_sigma * rng.normal();
        }
    }
    ds.metadata = {{"generator", "two_moons"},
                   {"per_class", std::to_string(per_class)},
                   {"noise", fmt_double(noise_sigma)},
                   {"dim", "2"}};
    return ds;
}

Dataset embed_rotated(const Dataset& planar, std::size_t dim, Rng& rng) {
    require(dim >= planar.dim(), ErrorCode::InvalidArgument,
            "embed_rotated: target dim smaller than source");
    const Mat rot = random_rotation(dim, rng);
    Dataset out = planar;
    out.samples = Mat(planar.size(), dim);
    for (std::size_t s = 0; s < planar.size(); ++s) {
        auto src = planar.samples.row(s);
        for (std::size_t r = 0; r < dim; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < src.size(); ++c) {
                acc += rot(r, c) * src[c];
            }
            out.samples(s, r) = acc;
        }
    }
    out.metadata["dim"] = std::to_string(dim);
    return out;
}

Dataset gen_two_moons(std::size_t per_class, double noise_sigma, std::size_t dim, Rng& rng) {
    require(dim >= 2, ErrorCode::InvalidArgument, "gen_two_moons: dim must be >= 2");
    Dataset planar = two_moons_planar(per_class, noise_sigma, rng);
    return embed_rotated(planar, dim, rng);
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, std::size_t every) {
    require(every >= 2, ErrorCode::InvalidArgument, "split_holdout: every must be >= 2");
    Dataset train;
    Dataset test;
    for (Dataset* d : {&train, &test}) {
        d->num_classes = ds.num_classes;
        d->metadata = ds.metadata;
        d->samples.cols = ds.dim();
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Dataset& d = (i % every == every - 1) ? test : train;
        d.samples.append_row(ds.samples.row(i));
        d.labels.push_back(ds.labels[i]);
    }
    return {std::move(train), std::move(test)};
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
    ds.validate();
    std::ostringstream meta;
    for (const auto& [k, v] : ds.metadata) {
        meta << k << '=' << v << '\n';
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    }
    binio::write_magic(os, kDatasetMagic);
    binio::write_u32(os, kDatasetVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(ds.dim()));
    binio::write_u64(os, ds.size());
    binio::write_u32(os, ds.num_classes);
    binio::write_string(os, meta.str());
    binio::write_f64s(os, ds.samples.values);
    for (std::int32_t l : ds.labels) {
        binio::write_i32(os, l);
    }
    if (!os.flush()) {
        fail(ErrorCode::Io, "write failed: " + path.string());
    }
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(ErrorCode::Io, "cannot open " + path.string());
    }
    binio::expect_magic(is, kDatasetMagic);
    const std::uint32_t version = binio::read_u32(is);
    if (version != kDatasetVersion) {
        fail(ErrorCode::Format, "unsupported dataset version " + std::to_string(version));
    }
    Dataset ds;
    const std::uint32_t dim = binio::read_u32(is);
    const std::uint64_t count = binio::read_u64(is);
    ds.num_classes = binio::read_u32(is);
    if (dim == 0 || count > (std::uint64_t{1} << 32)) {
        fail(ErrorCode::Format, "dataset header out of range");
    }
    std::istringstream meta(binio::read_string(is));
    for (std::string line; std::getline(meta, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::Format, "malformed metadata line: " + line);
        }
        ds.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ds.samples.rows = count;
    ds.samples.cols = dim;
    ds.samples.values = binio::read_f64s(is, count * dim);
    ds.labels.resize(count);
    for (auto& l : ds.labels) {
        l = binio::read_i32(is);
    }
    ds.validate();
    return ds;
}

void AugmentPolicy::validate() const {
    require(jitter_sigma >= 0.0, ErrorCode::InvalidArgument, "augment: jitter must be >= 0");
    require(drop_prob >= 0.0 && drop_prob <= 1.0, ErrorCode::InvalidArgument,
            "augment: drop_prob must lie in [0, 1]");
    require(scale_lo > 0.0 && scale_lo <= scale_hi, ErrorCode::InvalidArgument,
            "augment: scale range must be positive and ordered");
    require(max_rotation >= 0.0, ErrorCode::InvalidArgument, "augment: max_rotation must be >= 0");
    if (kind == AugmentKind::Weak) {
        require(drop_prob == 0.0 && !rotate, ErrorCode::InvalidArgument,
                "augment: weak policy cannot drop coordinates or rotate");
    }
}

AugmentPolicy AugmentPolicy::weak() {
    return {};
}

AugmentPolicy AugmentPolicy::strong() {
    AugmentPolicy p;
    p.kind = AugmentKind::Strong;
    p.jitter_sigma = 0.2;
    p.drop_prob = 0.2;
    p.scale_lo = 0.5;
    p.scale_hi = 1.5;
    p.rotate = true;
    return p;
}

Vec augment(std::span<const double> x, const AugmentPolicy& policy, Rng& rng) {
    policy.validate();
    Vec out(x.begin(), x.end());
    const double scale = rng.uniform(policy.scale_lo, policy.scale_hi);
    for (double& v : out) {
        v = v * scale + policy.jitter_sigma * rng.normal();
    }
    if (policy.kind == AugmentKind::Strong) {
        if (policy.drop_prob > 0.0) {
            for (double& v : out) {
                if (rng.uniform() < policy.drop_prob) {
                    v = 0.0;
                }
            }
        }
        if (policy.rotate && out.size() >= 2) {
            const std::size_t i = rng.below(out.size());
            std::size_t j = rng.below(out.size() - 1);
            if (j >= i) {
                ++j;
            }
            const double theta = rng.uniform(-policy.max_rotation, policy.max_rotation);
            const double c = std::cos(theta);
            const double s = std::sin(theta);
            const double a = out[i];
            const double b = out[j];
            out[i] = c * a - s * b;
            out[j] = s * a + c * b;
        }
    }
    return out;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t epoch_seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = Rng(epoch_seed).split(kPermutation);
    rng.shuffle(perm);
    return perm;
}

ViewPair make_view_pair(const Dataset& ds, std::size_t index, std::uint64_t epoch_seed,
                        const AugmentPolicy& query_policy, const AugmentPolicy& target_policy) {
    const Rng sample_rng = Rng(epoch_seed).split(kAugment).split(index);
    Rng q_rng = sample_rng.split(kQueryBranch);
    Rng t_rng = sample_rng.split(kTargetBranch);
    return {augment(ds.samples.row(index), query_policy, q_rng),
            augment(ds.samples.row(index), target_policy, t_rng), index};
}

std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size,
                                std::uint64_t epoch_seed, const AugmentPolicy& query_policy,
                                const AugmentPolicy& target_policy) {
    require(batch_size >= 1, ErrorCode::InvalidArgument, "make_batches: batch_size must be >= 1");
    const std::vector<std::size_t> perm = epoch_permutation(ds.size(), epoch_seed);
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < perm.size(); start += batch_size) {
        const std::size_t end = std::min(perm.size(), start + batch_size);
        Batch b;
        b.queries = Mat(end - start, ds.dim());
        b.targets = Mat(end - start, ds.dim());
        for (std::size_t r = start; r < end; ++r) {
            ViewPair v = make_view_pair(ds, perm[r], epoch_seed, query_policy, target_policy);
            std::copy(v.query_view.begin(), v.query_view.end(), b.queries.row(r - start).begin());
            std::copy(v.target_view.begin(), v.target_view.end(),
                      b.targets.row(r - start).begin());
            b.indices.push_back(perm[r]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace ascl
