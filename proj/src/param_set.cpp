// SPDX-License-Identifier: Apache-2.0
#include "rshmm/param_set.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "rshmm/error.hpp"
#include "text_io.hpp"

namespace rshmm {

using ojson = nlohmann::ordered_json;

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::InitL: return "init_L";
    case BlockKind::InitU: return "init_U";
    case BlockKind::TransL: return "trans_L";
    case BlockKind::TransU: return "trans_U";
    case BlockKind::ObsRS: return "obs_RS";
    case BlockKind::ObsAWR: return "obs_AWR";
  }
  return "?";
}

ParamSet ParamSet::make(const ModelSpec& spec, const ModelDims& dims) {
  ParamSet ps;
  ps.latent = LatentParams::make(spec, dims);
  ps.obs = ObservationParams::make(spec.k, spec.has_rs, dims.categories);
  return ps;
}

std::vector<BlockRef> ParamSet::layout() const {
  std::vector<BlockRef> out;
  int offset = 0;
  auto add = [&](BlockKind kind, int index, const LogitBlock& b) {
    out.push_back({kind, index, offset, b.free_count()});
    offset += b.free_count();
  };
  add(BlockKind::InitL, 0, latent.init_L);
  if (spec().has_rs) add(BlockKind::InitU, 0, latent.init_U);
  for (int l = 0; l < spec().k; ++l) add(BlockKind::TransL, l, latent.trans_L[l]);
  for (int b = 0; b < static_cast<int>(latent.trans_U.size()); ++b)
    add(BlockKind::TransU, b, latent.trans_U[b]);
  for (int q = 0; q < static_cast<int>(obs.rs.size()); ++q) add(BlockKind::ObsRS, q, obs.rs[q]);
  for (int q = 0; q < static_cast<int>(obs.awr.size()); ++q) add(BlockKind::ObsAWR, q, obs.awr[q]);
  return out;
}

std::vector<const LogitBlock*> ParamSet::blocks() const {
  std::vector<const LogitBlock*> out;
  out.push_back(&latent.init_L);
  if (spec().has_rs) out.push_back(&latent.init_U);
  for (const auto& b : latent.trans_L) out.push_back(&b);
  for (const auto& b : latent.trans_U) out.push_back(&b);
  for (const auto& b : obs.rs) out.push_back(&b);
  for (const auto& b : obs.awr) out.push_back(&b);
  return out;
}

std::vector<LogitBlock*> ParamSet::blocks() {
  std::vector<LogitBlock*> out;
  for (const LogitBlock* b : std::as_const(*this).blocks()) out.push_back(const_cast<LogitBlock*>(b));
  return out;
}

int ParamSet::size() const {
  int total = 0;
  for (const auto* b : blocks()) total += b->free_count();
  return total;
}

Vec ParamSet::pack() const {
  Vec theta(size());
  int pos = 0;
  for (const auto* b : blocks()) {
    const int m = b->free_count();
    theta.segment(pos, m) = b->pack();
    pos += m;
  }
  return theta;
}

void ParamSet::unpack(const VecRef& theta) {
  if (theta.size() != size()) raise(ErrorCode::DimensionMismatch, "parameter vector length mismatch");
  int pos = 0;
  for (auto* b : blocks()) {
    const int m = b->free_count();
    b->unpack(theta.segment(pos, m));
    pos += m;
  }
}

std::string ParamSet::block_label(const BlockRef& ref) const {
  const int r = dims().responses();
  auto i1 = [](int v) { return std::to_string(v + 1); };
  switch (ref.kind) {
    case BlockKind::InitL: return "pi_L1";
    case BlockKind::InitU: return "pi_U1";
    case BlockKind::TransL: return "pi_L_trans[" + i1(ref.index) + "]";
    case BlockKind::TransU:
      switch (spec().rs_trans) {
        case RsTransForm::Heterogeneous:
        case RsTransForm::Homogeneous:
          return "pi_UL[" + i1(ref.index / 2) + "," + i1(ref.index % 2) + "]";
        case RsTransForm::MemorylessHet:
        case RsTransForm::MemorylessHom: return "pi_UL[" + i1(ref.index) + "]";
        case RsTransForm::Factorial: return "pi_UL[ubar=" + i1(ref.index) + "]";
        default: return "pi_UL";
      }
    case BlockKind::ObsRS: return "f_RS[" + i1(ref.index / r) + "," + i1(ref.index % r) + "]";
    case BlockKind::ObsAWR: return "f_AWR[" + i1(ref.index / r) + "," + i1(ref.index % r) + "]";
  }
  return "?";
}

std::vector<std::string> ParamSet::names(const CovariateNames& cov) const {
  std::vector<std::string> out;
  const auto refs = layout();
  const auto bs = blocks();
  for (std::size_t q = 0; q < refs.size(); ++q) {
    const auto& ref = refs[q];
    const std::vector<std::string>* cn = nullptr;
    std::vector<std::string> design;
    switch (ref.kind) {
      case BlockKind::InitL: cn = &cov.x_L; break;
      case BlockKind::InitU: cn = &cov.x_U; break;
      case BlockKind::TransL: cn = &cov.z_L; break;
      case BlockKind::TransU: cn = &cov.z_U; break;
      case BlockKind::ObsRS: design = {"phi0", "phi1"}; break;
      case BlockKind::ObsAWR:
        for (int y = 1; y <= bs[q]->ncat - 1; ++y) design.push_back("logit[" + std::to_string(y) + "]");
        break;
    }
    static const std::vector<std::string> none;
    const std::string label = block_label(ref);
    for (const auto& nm : bs[q]->free_names(cn ? *cn : none, design)) out.push_back(label + "." + nm);
  }
  return out;
}

std::vector<bool> ParamSet::clamped_mask(double bound) const {
  const Vec theta = pack();
  std::vector<bool> mask(theta.size());
  for (int h = 0; h < theta.size(); ++h) mask[h] = std::abs(theta[h]) >= bound - 1e-9;
  return mask;
}

void ParamSet::clamp(double bound) {
  for (auto* b : blocks()) b->clamp(bound);
}

bool relabel_states(const ParamSet& params, const std::vector<int>& perm, ParamSet& out) {
  const int k = params.spec().k;
  if (static_cast<int>(perm.size()) != k) return false;
  out = ParamSet::make(params.spec(), params.dims());
  if (!relabel_into(params.latent.init_L, perm, out.latent.init_L)) return false;
  out.latent.init_U = params.latent.init_U;
  for (int m = 0; m < k; ++m)
    if (!relabel_into(params.latent.trans_L[perm[m]], perm, out.latent.trans_L[m])) return false;
  if (params.spec().has_rs) {
    for (int m = 0; m < k; ++m)
      for (int ubar = 0; ubar < 2; ++ubar) {
        const int dst = params.spec().rs_block_index(m, ubar);
        const int src = params.spec().rs_block_index(perm[m], ubar);
        if (dst >= 0) out.latent.trans_U[dst] = params.latent.trans_U[src];
      }
  }
  const int r = params.dims().responses();
  for (int m = 0; m < k; ++m)
    for (int j = 0; j < r; ++j) {
      if (params.spec().has_rs) out.obs.rs_block(m, j) = params.obs.rs_block(perm[m], j);
      out.obs.awr_block(m, j) = params.obs.awr_block(perm[m], j);
    }
  return true;
}

double awr_expected_value(const ParamSet& params, int l, int j) {
  const Vec p = params.obs.awr_block(l, j).probs(Vec());
  double ev = 0.0;
  for (int y = 0; y < p.size(); ++y) ev += (y + 1) * p[y];
  return ev;
}

std::vector<int> canonical_order(const ParamSet& params) {
  const int k = params.spec().k;
  const int r = params.dims().responses();
  std::vector<double> e1(k), e2(k, 0.0);
  for (int l = 0; l < k; ++l) {
    e1[l] = awr_expected_value(params, l, 0);
    if (r > 1) e2[l] = awr_expected_value(params, l, 1);
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    if (e1[a] != e1[b]) return e1[a] < e1[b];
    return e2[a] < e2[b];
  });
  return perm;
}

bool canonicalize(ParamSet& params) {
  const auto perm = canonical_order(params);
  bool identity = true;
  for (int m = 0; m < static_cast<int>(perm.size()); ++m) identity = identity && perm[m] == m;
  if (identity) return true;
  ParamSet out;
  if (!relabel_states(params, perm, out)) return false;
  params = std::move(out);
  return true;
}

namespace {

// Copies src into dst, padding missing covariate slopes with zeros.
bool embed_block(const LogitBlock& src, LogitBlock& dst) {
  std::vector<int> id(src.ncat);
  std::iota(id.begin(), id.end(), 0);
  if (src.family != LogitFamily::Design && src.p == 0 && dst.p > 0) {
    LogitBlock padded = src;
    padded.p = dst.p;
    if (padded.family == LogitFamily::Baseline)
      padded.slopes = Mat::Zero(src.ncat, dst.p);
    else
      padded.shared = Vec::Zero(dst.p);
    return relabel_into(padded, id, dst);
  }
  return relabel_into(src, id, dst);
}

}  // namespace

bool embed(const ParamSet& restricted, ParamSet& general) {
  const auto& rs = restricted.spec();
  const auto& gs = general.spec();
  if (rs.k != gs.k || rs.has_rs != gs.has_rs || !(restricted.dims() == general.dims())) return false;
  ParamSet out = ParamSet::make(gs, general.dims());
  if (!embed_block(restricted.latent.init_L, out.latent.init_L)) return false;
  for (int l = 0; l < gs.k; ++l)
    if (!embed_block(restricted.latent.trans_L[l], out.latent.trans_L[l])) return false;
  if (gs.has_rs) {
    out.latent.init_U = restricted.latent.init_U;
    if ((rs.rs_trans == RsTransForm::TimeInvariant) != (gs.rs_trans == RsTransForm::TimeInvariant))
      return false;
    std::vector<int> filled(out.latent.trans_U.size(), -1);
    for (int l = 0; l < gs.k; ++l)
      for (int ubar = 0; ubar < 2; ++ubar) {
        const int dst = gs.rs_block_index(l, ubar);
        const int src = rs.rs_block_index(l, ubar);
        if (dst < 0) continue;
        LogitBlock candidate = out.latent.trans_U[dst];
        if (!embed_block(restricted.latent.trans_U[src], candidate)) return false;
        if (filled[dst] >= 0 && (candidate.pack() - out.latent.trans_U[dst].pack()).cwiseAbs().maxCoeff() > 1e-12)
          return false;
        out.latent.trans_U[dst] = candidate;
        filled[dst] = src;
      }
  }
  out.obs = restricted.obs;
  general = std::move(out);
  return true;
}

std::string params_to_json(const ParamSet& params, const CovariateNames& cov) {
  ojson j;
  j["spec"] = ojson::parse(spec_to_json(params.spec()));
  j["dims"] = ojson::parse(dims_to_json(params.dims()));
  const Vec theta = params.pack();
  const auto names = params.names(cov);
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  j["names"] = names;
  ojson blocks = ojson::object();
  for (const auto& ref : params.layout()) {
    ojson b = ojson::object();
    for (int h = 0; h < ref.size; ++h) {
      const std::string& full = names[ref.offset + h];
      b[full.substr(full.find('.') + 1)] = theta[ref.offset + h];
    }
    blocks[params.block_label(ref)] = b;
  }
  j["blocks"] = blocks;
  return j.dump(2);
}

ParamSet params_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    raise(ErrorCode::Parse, std::string("parameters: ") + e.what());
  }
  const auto& root = j.contains("params") ? j.at("params") : j;
  try {
    const ModelSpec spec = spec_from_json(root.at("spec").dump());
    const ModelDims dims = dims_from_json(root.at("dims").dump());
    ParamSet ps = ParamSet::make(spec, dims);
    const auto theta = root.at("theta").get<std::vector<double>>();
    if (static_cast<int>(theta.size()) != ps.size())
      raise(ErrorCode::DimensionMismatch, "theta has " + std::to_string(theta.size()) +
                                              " entries, model needs " + std::to_string(ps.size()));
    ps.unpack(Eigen::Map<const Vec>(theta.data(), static_cast<Eigen::Index>(theta.size())));
    return ps;
  } catch (const ojson::exception& e) {
    raise(ErrorCode::Parse, std::string("parameters: ") + e.what());
  }
}

std::string pmf_table_csv(const ParamSet& params) {
  std::string out = "regime,state,response,category,prob\n";
  const int k = params.spec().k;
  const int r = params.dims().responses();
  auto emit = [&](const char* regime, int l, int j, const Vec& p) {
    for (int y = 0; y < p.size(); ++y)
      out += std::string(regime) + "," + std::to_string(l + 1) + "," + std::to_string(j + 1) + "," +
             std::to_string(y + 1) + "," + detail::format_double(p[y]) + "\n";
  };
  for (int l = 0; l < k; ++l)
    for (int j = 0; j < r; ++j) {
      if (params.spec().has_rs) emit("RS", l, j, params.obs.rs_block(l, j).probs(Vec()));
      emit("AWR", l, j, params.obs.awr_block(l, j).probs(Vec()));
    }
  return out;
}

}  // namespace rshmm
