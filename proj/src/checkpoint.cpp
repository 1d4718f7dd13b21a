#include "perch/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "perch/errors.hpp"
#include "perch/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace perch::io {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'R', 'C', 'H', 'C', 'K', 'P'};

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

void put_f64(std::string& out, double v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

void put_spec(std::string& out, const rl::MlpSpec& spec) {
    put_u32(out, static_cast<std::uint32_t>(spec.n_in));
    put_u32(out, static_cast<std::uint32_t>(spec.hidden.size()));
    for (int h : spec.hidden) put_u32(out, static_cast<std::uint32_t>(h));
    put_u32(out, static_cast<std::uint32_t>(spec.n_out));
    put_f64(out, spec.output_scale);
}

void put_params(std::string& out, const std::vector<double>& p) {
    put_u64(out, p.size());
    const std::size_t bytes = p.size() * sizeof(double);
    const std::size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, p.data(), bytes);
}

class Reader {
  public:
    Reader(const std::string& data, std::string origin)
        : data_(data), origin_(std::move(origin)) {}

    std::uint32_t u32() {
        std::uint32_t v;
        take(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        take(&v, 8);
        return v;
    }
    double f64() {
        double v;
        take(&v, 8);
        return v;
    }
    void raw(void* dst, std::size_t n) { take(dst, n); }
    bool exhausted() const { return pos_ == data_.size(); }
    const std::string& origin() const { return origin_; }

  private:
    void take(void* dst, std::size_t n) {
        if (pos_ + n > data_.size())
            throw IoError(origin_ + ": truncated checkpoint");
        std::memcpy(dst, data_.data() + pos_, n);
        pos_ += n;
    }

    const std::string& data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

rl::MlpSpec read_spec(Reader& r) {
    rl::MlpSpec spec;
    spec.n_in = static_cast<int>(r.u32());
    const std::uint32_t layers = r.u32();
    if (layers == 0 || layers > 64)
        throw ShapeMismatch(r.origin() + ": implausible hidden-layer count");
    spec.hidden.clear();
    for (std::uint32_t i = 0; i < layers; ++i) spec.hidden.push_back(static_cast<int>(r.u32()));
    spec.n_out = static_cast<int>(r.u32());
    spec.output_scale = r.f64();
    if (spec.n_in <= 0 || spec.n_out <= 0)
        throw ShapeMismatch(r.origin() + ": non-positive layer width");
    for (int h : spec.hidden)
        if (h <= 0) throw ShapeMismatch(r.origin() + ": non-positive layer width");
    return spec;
}

std::vector<double> read_params(Reader& r, const rl::MlpSpec& spec) {
    const std::uint64_t n = r.u64();
    if (n != static_cast<std::uint64_t>(spec.param_count()))
        throw ShapeMismatch(r.origin() + ": parameter count " + std::to_string(n) +
                            " does not match the architecture (" +
                            std::to_string(spec.param_count()) + ")");
    std::vector<double> p(n);
    r.raw(p.data(), n * sizeof(double));
    return p;
}

}  // namespace

Checkpoint make_checkpoint(const rl::PolicyNet& policy, const rl::MlpNet& value,
                           std::uint64_t seed, std::uint32_t iteration,
                           std::uint64_t config_hash) {
    Checkpoint c;
    c.policy_spec = policy.net.spec();
    c.scale = policy.scale;
    c.policy_params = policy.net.params();
    c.value_spec = value.spec();
    c.value_params = value.params();
    c.seed = seed;
    c.iteration = iteration;
    c.config_hash = config_hash;
    return c;
}

rl::PolicyNet policy_from(const Checkpoint& c) {
    rl::MlpNet net(c.policy_spec);
    if (c.policy_params.size() != net.params().size())
        throw ShapeMismatch("checkpoint: policy parameter count mismatch");
    net.params() = c.policy_params;
    return {std::move(net), c.scale};
}

rl::MlpNet value_from(const Checkpoint& c) {
    rl::MlpNet net(c.value_spec);
    if (c.value_params.size() != net.params().size())
        throw ShapeMismatch("checkpoint: value parameter count mismatch");
    net.params() = c.value_params;
    return net;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, Checkpoint::kVersion);
    put_spec(out, c.policy_spec);
    put_f64(out, c.scale.mid);
    put_f64(out, c.scale.half_span);
    put_params(out, c.policy_params);
    put_spec(out, c.value_spec);
    put_params(out, c.value_params);
    put_u64(out, c.seed);
    put_u32(out, c.iteration);
    put_u64(out, c.config_hash);
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    Reader r(data, path.string());

    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path.string() + ": not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion)
        throw VersionMismatch(path.string() + ": unsupported checkpoint version " +
                              std::to_string(version));

    Checkpoint c;
    c.policy_spec = read_spec(r);
    c.scale.mid = r.f64();
    c.scale.half_span = r.f64();
    c.policy_params = read_params(r, c.policy_spec);
    c.value_spec = read_spec(r);
    c.value_params = read_params(r, c.value_spec);
    c.seed = r.u64();
    c.iteration = r.u32();
    c.config_hash = r.u64();
    if (!r.exhausted()) throw IoError(path.string() + ": trailing bytes after checkpoint");
    return c;
}

std::string checkpoint_summary_json(const Checkpoint& c) {
    using nlohmann::json;
    auto stats = [](const std::vector<double>& p) {
        double lo = 0.0, hi = 0.0, sq = 0.0;
        if (!p.empty()) {
            lo = hi = p[0];
            for (double v : p) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sq += v * v;
            }
        }
        return json{{"count", p.size()}, {"min", lo}, {"max", hi}, {"l2", std::sqrt(sq)}};
    };
    auto spec = [](const rl::MlpSpec& s) {
        return json{{"n_in", s.n_in},
                    {"hidden", s.hidden},
                    {"n_out", s.n_out},
                    {"output_scale", s.output_scale}};
    };
    json j;
    j["version"] = Checkpoint::kVersion;
    j["policy"] = {{"arch", spec(c.policy_spec)},
                   {"action_mid", c.scale.mid},
                   {"action_half_span", c.scale.half_span},
                   {"params", stats(c.policy_params)}};
    j["value"] = {{"arch", spec(c.value_spec)}, {"params", stats(c.value_params)}};
    j["seed"] = c.seed;
    j["iteration"] = c.iteration;
    j["config_hash"] = c.config_hash;
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace perch::io
