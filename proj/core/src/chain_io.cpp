#include "easimix/chain_io.hpp"

#include "easimix/config.hpp"
#include "json_util.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace easimix {

namespace {

using detail::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'E', 'A', 'S', 'I', 'M', 'I', 'X', 'C'};
constexpr std::size_t kHeaderBytes = 32;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t unhex(const std::string& s) {
  if (s.size() != 16) throw IoError("chain manifest: malformed hash '" + s + "'");
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos, 16);
  if (pos != s.size()) throw IoError("chain manifest: malformed hash '" + s + "'");
  return v;
}

std::string stem_of(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) return (p / "chain").string();
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p.string();
}

class Writer {
public:
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void vec(const Vec& v) { raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size())); }
  void mat(const Mat& m) { raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size())); }
  std::vector<char>& bytes() { return buf_; }

private:
  std::vector<char> buf_;
};

class Reader {
public:
  Reader(const char* p, std::size_t n) : p_(p), n_(n) {}
  void raw(void* out, std::size_t n) {
    if (pos_ + n > n_) throw IoError("chain payload: truncated");
    std::memcpy(out, p_ + pos_, n);
    pos_ += n;
  }
  Vec vec(Eigen::Index k) {
    Vec v(k);
    raw(v.data(), sizeof(double) * static_cast<std::size_t>(k));
    return v;
  }
  Mat mat(Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    raw(m.data(), sizeof(double) * static_cast<std::size_t>(r * c));
    return m;
  }
  bool done() const { return pos_ == n_; }

private:
  const char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

json priors_to_json(const PriorHyperparams& p) {
  json bm = json::array(), bc = json::array(), nu = json::array(), se = json::array(), rm = json::array(),
       rc = json::array();
  for (const auto& v : p.beta_mean) bm.push_back(detail::to_json(v));
  for (const auto& m : p.beta_cov) bc.push_back(detail::to_json(m));
  for (double v : p.nu) nu.push_back(v);
  for (const auto& m : p.scale_eps) se.push_back(detail::to_json(m));
  for (const auto& m : p.reg_mean) rm.push_back(detail::to_json(m));
  for (const auto& m : p.reg_row_cov) rc.push_back(detail::to_json(m));
  return json{{"beta_mean", bm},
              {"beta_cov", bc},
              {"gamma_mean", detail::to_json(p.gamma_mean)},
              {"gamma_cov", detail::to_json(p.gamma_cov)},
              {"alpha", detail::to_json(p.alpha)},
              {"nu_uu", p.nu_uu},
              {"scale_uu", detail::to_json(p.scale_uu)},
              {"nu", nu},
              {"scale_eps", se},
              {"reg_mean", rm},
              {"reg_row_cov", rc}};
}

PriorHyperparams priors_from_json(const json& j, const Dimensions& dims) {
  PriorHyperparams p;
  const Eigen::Index s = dims.modeled();
  for (const auto& v : j.at("beta_mean")) p.beta_mean.push_back(detail::vec_from(v, "prior beta_mean"));
  for (const auto& m : j.at("beta_cov")) p.beta_cov.push_back(detail::mat_from(m, "prior beta_cov"));
  p.gamma_mean = detail::vec_from(j.at("gamma_mean"), "prior gamma_mean");
  p.gamma_cov = detail::mat_from(j.at("gamma_cov"), "prior gamma_cov");
  p.alpha = detail::vec_from(j.at("alpha"), "prior alpha");
  p.nu_uu = j.at("nu_uu").get<double>();
  p.scale_uu = detail::mat_from(j.at("scale_uu"), "prior scale_uu");
  for (const auto& v : j.at("nu")) p.nu.push_back(v.get<double>());
  for (const auto& m : j.at("scale_eps")) p.scale_eps.push_back(detail::mat_from(m, "prior scale_eps"));
  for (const auto& m : j.at("reg_mean")) p.reg_mean.push_back(detail::mat_from(m, "prior reg_mean", s));
  for (const auto& m : j.at("reg_row_cov")) p.reg_row_cov.push_back(detail::mat_from(m, "prior reg_row_cov"));
  return p;
}

}  // namespace

std::uint64_t chain_layout_hash(const Dimensions& d, std::size_t snapshots, std::size_t sweeps, int observations,
                                bool store_latent) {
  const std::int64_t fields[] = {d.goods,    d.degree,   d.demographics, d.price_covariates,
                                 d.utility_covariates,   d.instruments,  d.clusters,
                                 d.symmetric ? 1 : 0,    static_cast<std::int64_t>(snapshots),
                                 static_cast<std::int64_t>(sweeps),      observations,
                                 store_latent ? 1 : 0,   kChainFormatVersion};
  return fnv1a(fields, sizeof fields);
}

void persist_chain(const Chain& chain, const std::string& path) {
  const Dimensions& d = chain.dims;
  const int J = d.clusters;
  const int n = chain.observations;
  const bool latent = chain.settings.store_latent;
  const std::size_t sweeps = chain.log_likelihood.size();
  if (chain.occupancy.size() != sweeps * static_cast<std::size_t>(J))
    throw DimensionError("persist_chain: occupancy trace does not match the log-likelihood trace");

  Writer w;
  for (const auto& snap : chain.snapshots) {
    if (snap.clusters() != J || static_cast<int>(snap.psi.size()) != n)
      throw DimensionError("persist_chain: snapshot shape disagrees with the chain");
    for (const auto& b : snap.beta) {
      if (b.size() != d.beta_dim()) throw DimensionError("persist_chain: beta length");
      w.vec(b);
    }
    if (snap.gamma.size() != d.gamma_dim()) throw DimensionError("persist_chain: gamma length");
    w.vec(snap.gamma);
    for (const auto& s : snap.sigma) {
      if (s.rows() != d.error_dim() || s.cols() != d.error_dim()) throw DimensionError("persist_chain: sigma shape");
      w.mat(s);
    }
    std::vector<std::int32_t> psi(snap.psi.begin(), snap.psi.end());
    w.raw(psi.data(), sizeof(std::int32_t) * psi.size());
    w.vec(snap.phi);
    if (latent) {
      if (static_cast<int>(snap.latent.size()) != n || snap.y.size() != n)
        throw DimensionError("persist_chain: stored latent shares are incomplete");
      for (const auto& v : snap.latent) w.vec(v);
      w.vec(snap.y);
    }
  }
  w.raw(chain.log_likelihood.data(), sizeof(double) * sweeps);
  std::vector<std::int32_t> occ(chain.occupancy.begin(), chain.occupancy.end());
  w.raw(occ.data(), sizeof(std::int32_t) * occ.size());
  const std::vector<char>& payload = w.bytes();

  const std::uint64_t layout = chain_layout_hash(d, chain.snapshots.size(), sweeps, n, latent);
  const std::uint64_t checksum = fnv1a(payload.data(), payload.size());

  char header[kHeaderBytes] = {};
  std::memcpy(header, kMagic, 8);
  const std::uint32_t version = kChainFormatVersion;
  std::memcpy(header + 8, &version, 4);
  std::memcpy(header + 16, &layout, 8);
  const std::uint64_t size = payload.size();
  std::memcpy(header + 24, &size, 8);

  const ChainSettings& s = chain.settings;
  json manifest{{"format", "easimix-chain"},
                {"version", kChainFormatVersion},
                {"layout_hash", hex(layout)},
                {"payload_checksum", hex(checksum)},
                {"payload_bytes", size},
                {"dimensions", detail::to_json(d)},
                {"settings",
                 {{"sweeps", s.sweeps},
                  {"burn_in", s.burn_in},
                  {"thin", s.thin},
                  {"seed", hex(s.seed)},
                  {"threads", s.threads},
                  {"truncation_sweeps", s.truncation_sweeps},
                  {"store_latent", s.store_latent}}},
                {"observations", n},
                {"data_hash", hex(chain.data_hash)},
                {"snapshots", chain.snapshots.size()},
                {"trace_length", sweeps},
                {"notes", chain.notes},
                {"priors", priors_to_json(chain.priors)}};

  const std::string stem = stem_of(path);
  {
    std::ofstream out(stem + ".bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + stem + ".bin");
    out.write(header, kHeaderBytes);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + stem + ".bin");
  }
  write_text_file(stem + ".json", manifest.dump(1));
}

Chain load_chain(const std::string& path) {
  const std::string stem = stem_of(path);
  Chain chain;
  std::uint64_t layout = 0, checksum = 0, payload_bytes = 0;
  std::size_t snapshots = 0, sweeps = 0;
  try {
    const json m = json::parse(read_text_file(stem + ".json"));
    if (m.at("format") != "easimix-chain") throw IoError("chain manifest: unknown format");
    if (m.at("version").get<int>() != kChainFormatVersion) throw IoError("chain manifest: unsupported version");
    layout = unhex(m.at("layout_hash").get<std::string>());
    checksum = unhex(m.at("payload_checksum").get<std::string>());
    payload_bytes = m.at("payload_bytes").get<std::uint64_t>();
    chain.dims = detail::dims_from(m.at("dimensions"));
    const json& s = m.at("settings");
    chain.settings.sweeps = s.at("sweeps").get<long>();
    chain.settings.burn_in = s.at("burn_in").get<long>();
    chain.settings.thin = s.at("thin").get<long>();
    chain.settings.seed = unhex(s.at("seed").get<std::string>());
    chain.settings.threads = s.at("threads").get<int>();
    chain.settings.truncation_sweeps = s.at("truncation_sweeps").get<int>();
    chain.settings.store_latent = s.at("store_latent").get<bool>();
    chain.observations = m.at("observations").get<int>();
    chain.data_hash = unhex(m.at("data_hash").get<std::string>());
    snapshots = m.at("snapshots").get<std::size_t>();
    sweeps = m.at("trace_length").get<std::size_t>();
    chain.notes = m.at("notes").get<std::vector<std::string>>();
    chain.priors = priors_from_json(m.at("priors"), chain.dims);
  } catch (const json::exception& e) {
    throw IoError("chain manifest " + stem + ".json: " + e.what());
  } catch (const Error& e) {
    throw IoError("chain manifest " + stem + ".json: " + e.what());
  }
  if (chain_layout_hash(chain.dims, snapshots, sweeps, chain.observations, chain.settings.store_latent) != layout)
    throw IoError("chain manifest " + stem + ".json: layout hash mismatch");

  std::ifstream in(stem + ".bin", std::ios::binary);
  if (!in) throw IoError("cannot open " + stem + ".bin");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) throw IoError(stem + ".bin: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw IoError(stem + ".bin: not a chain file");
  std::uint32_t version = 0;
  std::uint64_t file_layout = 0, size = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&file_layout, bytes.data() + 16, 8);
  std::memcpy(&size, bytes.data() + 24, 8);
  if (version != kChainFormatVersion) throw IoError(stem + ".bin: unsupported version");
  if (file_layout != layout) throw IoError(stem + ".bin: layout hash does not match the manifest");
  if (size != payload_bytes || bytes.size() - kHeaderBytes != size)
    throw IoError(stem + ".bin: truncated payload (" + std::to_string(bytes.size() - kHeaderBytes) + " of " +
                  std::to_string(payload_bytes) + " bytes)");
  const char* payload = bytes.data() + kHeaderBytes;
  if (fnv1a(payload, size) != checksum) throw IoError(stem + ".bin: payload checksum mismatch");

  const Dimensions& d = chain.dims;
  const int J = d.clusters;
  const int n = chain.observations;
  Reader r(payload, size);
  chain.snapshots.resize(snapshots);
  for (auto& snap : chain.snapshots) {
    for (int j = 0; j < J; ++j) snap.beta.push_back(r.vec(d.beta_dim()));
    snap.gamma = r.vec(d.gamma_dim());
    for (int j = 0; j < J; ++j) snap.sigma.push_back(r.mat(d.error_dim(), d.error_dim()));
    std::vector<std::int32_t> psi(n);
    r.raw(psi.data(), sizeof(std::int32_t) * psi.size());
    snap.psi.assign(psi.begin(), psi.end());
    snap.phi = r.vec(J);
    if (chain.settings.store_latent) {
      for (int i = 0; i < n; ++i) snap.latent.push_back(r.vec(d.goods));
      snap.y = r.vec(n);
    }
  }
  chain.log_likelihood.resize(sweeps);
  r.raw(chain.log_likelihood.data(), sizeof(double) * sweeps);
  std::vector<std::int32_t> occ(sweeps * J);
  r.raw(occ.data(), sizeof(std::int32_t) * occ.size());
  chain.occupancy.assign(occ.begin(), occ.end());
  if (!r.done()) throw IoError(stem + ".bin: trailing bytes after payload");
  return chain;
}

}  // namespace easimix
