#include "admmcert/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace admmcert {

namespace fs = std::filesystem;

std::map<std::string, int> json_pointer_lines(const std::string& text) {
  struct Frame {
    bool arr;
    int idx;
    std::string key;
  };
  std::map<std::string, int> out;
  std::vector<Frame> st;
  int line = 1;
  bool expect_key = false;
  auto pointer = [&] {
    std::string p;
    for (const auto& f : st) p += "/" + (f.arr ? std::to_string(f.idx) : f.key);
    return p;
  };
  std::size_t i = 0, n = text.size();
  auto read_string = [&] {
    std::string s;
    ++i;
    while (i < n && text[i] != '"') {
      if (text[i] == '\\' && i + 1 < n) {
        s += text[i + 1];
        i += 2;
        continue;
      }
      if (text[i] == '\n') ++line;
      s += text[i++];
    }
    ++i;
    return s;
  };
  while (i < n) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ':') {
      expect_key = false;
      ++i;
    } else if (c == ',') {
      if (!st.empty()) {
        if (st.back().arr)
          ++st.back().idx;
        else
          expect_key = true;
      }
      ++i;
    } else if (c == '}' || c == ']') {
      if (!st.empty()) st.pop_back();
      expect_key = false;
      ++i;
    } else if (c == '"' && expect_key) {
      st.back().key = read_string();
    } else {
      out.emplace(pointer(), line);
      if (c == '{' || c == '[') {
        st.push_back({c == '[', 0, ""});
        expect_key = c == '{';
        ++i;
      } else if (c == '"') {
        read_string();
      } else {
        while (i < n && !std::strchr(",]}\n \t\r", text[i])) ++i;
      }
    }
  }
  return out;
}

namespace {

struct Ctx {
  std::string name;
  std::map<std::string, int> lines;

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    std::string p = ptr;
    int ln = 0;
    while (true) {
      auto it = lines.find(p);
      if (it != lines.end()) {
        ln = it->second;
        break;
      }
      if (p.empty()) break;
      p = p.substr(0, p.rfind('/'));
    }
    throw ConfigError(name + ":" + std::to_string(ln) + ": " + (ptr.empty() ? "/" : ptr) + ": " + msg);
  }
};

// "blocks[1].objective: ..." -> "/blocks/1/objective"
std::string path_to_pointer(const std::string& msg) {
  std::string head = msg.substr(0, msg.find(':'));
  std::string p = "/";
  for (char c : head) {
    if (c == '[' || c == '.')
      p += '/';
    else if (c != ']')
      p += c;
  }
  return p;
}

double number(const Ctx& cx, const json& j, const std::string& ptr) {
  if (!j.is_number()) cx.fail(ptr, "expected a number");
  return j.get<double>();
}

std::string str(const Ctx& cx, const json& j, const std::string& ptr) {
  if (!j.is_string()) cx.fail(ptr, "expected a string");
  return j.get<std::string>();
}

template <class E>
E choice(const Ctx& cx, const json& j, const std::string& ptr, const std::vector<std::pair<std::string, E>>& opts) {
  std::string s = str(cx, j, ptr);
  std::string names;
  for (const auto& [k, v] : opts) {
    if (k == s) return v;
    names += (names.empty() ? "" : ", ") + k;
  }
  cx.fail(ptr, "unknown value '" + s + "' (expected one of " + names + ")");
}

std::vector<double> numbers(const Ctx& cx, const json& j, const std::string& ptr) {
  std::vector<double> v;
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) cx.fail(ptr, "expected a number or an array of numbers");
  for (std::size_t k = 0; k < j.size(); ++k) v.push_back(number(cx, j[k], ptr + "/" + std::to_string(k)));
  return v;
}

ObjectiveDesc objective(const Ctx& cx, const json& j, const std::string& ptr, int dims) {
  if (!j.is_object()) cx.fail(ptr, "expected an object");
  if (!j.contains("kind")) cx.fail(ptr, "missing 'kind'");
  std::string kind = str(cx, j["kind"], ptr + "/kind");
  auto need = [&](const char* k) {
    if (!j.contains(k)) cx.fail(ptr, std::string("missing '") + k + "'");
    return number(cx, j[k], ptr + "/" + k);
  };
  if (kind == "quadratic") return ObjectiveDesc::quadratic(need("c"), dims);
  if (kind == "l1") return ObjectiveDesc::l1(need("r"), dims);
  if (kind == "sector") return ObjectiveDesc::sector(need("lo"), need("hi"), dims);
  cx.fail(ptr + "/kind", "unknown objective kind '" + kind + "' (expected quadratic, l1, sector)");
}

json objective_to_json(const ObjectiveDesc& o) {
  switch (o.kind) {
    case ObjectiveDesc::Kind::Quadratic: return {{"kind", "quadratic"}, {"c", o.c}};
    case ObjectiveDesc::Kind::L1: return {{"kind", "l1"}, {"r", o.r}};
    default: return {{"kind", "sector"}, {"lo", o.nu_minus.at(0)}, {"hi", o.nu_plus.at(0)}};
  }
}

Instance instance_impl(const Ctx& cx, const json& j, const std::string& ptr) {
  if (!j.is_object()) cx.fail(ptr, "expected an object");
  Instance in;
  if (!j.contains("A") || !j["A"].is_array() || j["A"].empty()) cx.fail(ptr + "/A", "expected a non-empty array of block matrices");
  for (std::size_t i = 0; i < j["A"].size(); ++i) {
    std::string p = ptr + "/A/" + std::to_string(i);
    try {
      in.A.push_back(matrix_from_json(j["A"][i]));
    } catch (const std::invalid_argument& e) {
      cx.fail(p, e.what());
    }
  }
  if (!j.contains("q")) cx.fail(ptr, "missing 'q'");
  try {
    in.q = matrix_from_json(j["q"]).reshaped();
  } catch (const std::invalid_argument& e) {
    cx.fail(ptr + "/q", e.what());
  }
  if (!j.contains("objectives") || !j["objectives"].is_array() || j["objectives"].size() != in.A.size())
    cx.fail(ptr + "/objectives", "one objective per block required");
  for (std::size_t i = 0; i < in.A.size(); ++i)
    in.objectives.push_back(objective(cx, j["objectives"][i], ptr + "/objectives/" + std::to_string(i),
                                      static_cast<int>(in.A[i].cols())));
  auto vec = [&](const char* key) -> std::optional<VectorXd> {
    if (!j.contains(key)) return std::nullopt;
    try {
      return VectorXd(matrix_from_json(j[key]).reshaped());
    } catch (const std::invalid_argument& e) {
      cx.fail(ptr + "/" + key, e.what());
    }
  };
  if (j.contains("x_star")) {
    if (!j["x_star"].is_array() || j["x_star"].size() != in.A.size()) cx.fail(ptr + "/x_star", "one vector per block");
    std::vector<VectorXd> xs;
    for (std::size_t i = 0; i < in.A.size(); ++i) xs.push_back(matrix_from_json(j["x_star"][i]).reshaped());
    in.x_star = xs;
  }
  in.lambda_star = vec("lambda_star");
  in.planted = vec("planted");
  for (std::size_t i = 0; i < in.A.size(); ++i)
    if (in.A[i].rows() != in.q.size())
      cx.fail(ptr + "/A/" + std::to_string(i), "has " + std::to_string(in.A[i].rows()) + " rows, q has " +
                                                   std::to_string(in.q.size()));
  return in;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

Config parse_config(const std::string& text, const std::string& name) {
  Ctx cx{name, {}};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    int ln = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    std::size_t bol = text.rfind('\n', upto ? upto - 1 : 0);
    int col = static_cast<int>(upto - (bol == std::string::npos ? 0 : bol + 1)) + 1;
    throw ConfigError(name + ":" + std::to_string(ln) + ":" + std::to_string(col) + ": malformed JSON: " + e.what());
  }
  cx.lines = json_pointer_lines(text);
  if (!j.is_object()) cx.fail("", "top level must be an object");

  static const std::vector<std::string> known{"mode", "method", "tol", "blocks", "instance", "beta", "gamma",
                                              "alpha", "variant", "mu_convention", "dual_sign", "gains",
                                              "pair_set", "sector_sign", "order", "sweep", "search",
                                              "synthesis", "run", "q_norm", "comment"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) cx.fail("/" + it.key(), "unknown key");

  Config c;
  c.path = name;
  ProblemSpec& s = c.spec;
  if (j.contains("beta")) s.beta = number(cx, j["beta"], "/beta");
  if (j.contains("gamma")) s.gamma = number(cx, j["gamma"], "/gamma");
  if (!(s.beta > 0.0)) cx.fail("/beta", "must be > 0");
  if (!(s.gamma > 0.0)) cx.fail("/gamma", "must be > 0");
  if (j.contains("variant"))
    s.variant = choice<Variant>(cx, j["variant"], "/variant",
                                {{"prox-minus-beta", Variant::ProxMinusBeta}, {"prox-identity", Variant::ProxIdentity}});
  if (j.contains("mu_convention"))
    s.mu_convention = choice<MuConvention>(cx, j["mu_convention"], "/mu_convention",
                                           {{"conservative", MuConvention::Conservative},
                                            {"paper-literal", MuConvention::PaperLiteral}});
  if (j.contains("dual_sign"))
    s.dual_sign = choice<DualSign>(cx, j["dual_sign"], "/dual_sign",
                                   {{"ascent", DualSign::Ascent}, {"as-printed", DualSign::AsPrinted}});
  if (j.contains("mode"))
    c.mode = choice<Mode>(cx, j["mode"], "/mode", {{"gs", Mode::GaussSeidel}, {"pj", Mode::Jacobi}});
  c.run.algo = c.mode;
  if (j.contains("method")) {
    try {
      c.method = method_from_string(str(cx, j["method"], "/method"));
    } catch (const std::invalid_argument& e) {
      cx.fail("/method", e.what());
    }
  }
  if (j.contains("tol")) {
    c.tol = number(cx, j["tol"], "/tol");
    if (!(c.tol > 0.0 && c.tol < 0.5)) cx.fail("/tol", "must lie in (0, 0.5)");
  }
  if (j.contains("pair_set"))
    c.cert.pair_set = choice<PairSet>(cx, j["pair_set"], "/pair_set",
                                      {{"cyclic", PairSet::Cyclic}, {"full-product", PairSet::FullProduct}});
  if (j.contains("sector_sign"))
    c.cert.sector_sign = choice<SectorSign>(cx, j["sector_sign"], "/sector_sign",
                                            {{"lure", SectorSign::Lure}, {"printed", SectorSign::Printed}});
  if (j.contains("order"))
    for (double v : numbers(cx, j["order"], "/order")) c.cert.order.push_back(static_cast<int>(v) - 1);

  if (j.contains("blocks") && j.contains("instance")) cx.fail("/instance", "give either 'blocks' or 'instance'");
  std::vector<double> alpha;
  if (j.contains("alpha")) alpha = numbers(cx, j["alpha"], "/alpha");
  if (j.contains("instance")) {
    const json& ij = j["instance"];
    if (ij.is_object() && ij.contains("file")) {
      fs::path base = fs::path(name).parent_path();
      std::string f = (base / str(cx, ij["file"], "/instance/file")).string();
      std::string t;
      try {
        t = read_file(f);
      } catch (const std::runtime_error& e) {
        cx.fail("/instance/file", e.what());
      }
      Ctx sub{f, json_pointer_lines(t)};
      json fj;
      try {
        fj = json::parse(t);
      } catch (const json::parse_error& e) {
        cx.fail("/instance/file", std::string("malformed instance file: ") + e.what());
      }
      c.instance = instance_impl(sub, fj, "");
    } else {
      c.instance = instance_impl(cx, ij, "/instance");
    }
    Instance& in = *c.instance;
    in.beta = s.beta;
    in.gamma = s.gamma;
    in.variant = s.variant;
    in.dual_sign = s.dual_sign;
    if (alpha.size() == 1) alpha.assign(in.A.size(), alpha[0]);
    if (alpha.size() != in.A.size()) cx.fail("/alpha", "one value per block required");
    in.alpha = alpha;
  } else {
    if (!j.contains("blocks") || !j["blocks"].is_array()) cx.fail("/blocks", "expected an array of blocks");
    for (std::size_t i = 0; i < j["blocks"].size(); ++i) {
      std::string p = "/blocks/" + std::to_string(i);
      const json& b = j["blocks"][i];
      if (!b.is_object()) cx.fail(p, "expected an object");
      BlockSpec bs;
      if (!b.contains("sigma_max")) cx.fail(p, "missing 'sigma_max'");
      bs.sigma_max = number(cx, b["sigma_max"], p + "/sigma_max");
      bs.sigma_min = b.contains("sigma_min") ? number(cx, b["sigma_min"], p + "/sigma_min") : bs.sigma_max;
      if (!b.contains("objective")) cx.fail(p, "missing 'objective'");
      bs.objective = objective(cx, b["objective"], p + "/objective", 1);
      s.blocks.push_back(bs);
    }
    if (alpha.size() == 1) alpha.assign(s.blocks.size(), alpha[0]);
    s.alpha = alpha;
  }
  if (j.contains("q_norm")) s.q_norm = number(cx, j["q_norm"], "/q_norm");

  try {
    if (c.instance) {
      ProblemSpec keep = s;
      s = c.instance->spec();
      s.mu_convention = keep.mu_convention;
    }
    validate(s);
  } catch (const std::invalid_argument& e) {
    std::string m = e.what();
    cx.fail(path_to_pointer(m), m.substr(m.find(':') == std::string::npos ? 0 : m.find(':') + 2));
  }

  if (j.contains("gains")) {
    auto g = numbers(cx, j["gains"], "/gains");
    c.gains = Eigen::Map<VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  }
  if (j.contains("sweep")) {
    const json& g = j["sweep"];
    if (!g.is_object()) cx.fail("/sweep", "expected an object");
    SweepGrid grid{{s.beta}, {s.gamma}, {}};
    if (g.contains("beta")) grid.beta = numbers(cx, g["beta"], "/sweep/beta");
    if (g.contains("gamma")) grid.gamma = numbers(cx, g["gamma"], "/sweep/gamma");
    if (g.contains("alpha")) grid.alpha = numbers(cx, g["alpha"], "/sweep/alpha");
    if (grid.alpha.empty()) grid.alpha = {s.alpha.at(0)};
    for (auto* axis : {&grid.beta, &grid.gamma, &grid.alpha}) {
      if (axis->empty()) cx.fail("/sweep", "axes must be non-empty");
      for (double v : *axis)
        if (!(v > 0.0)) cx.fail("/sweep", "grid values must be positive");
    }
    c.grid = grid;
  }
  if (j.contains("search")) {
    const json& g = j["search"];
    if (g.contains("table"))
      c.table_mode = choice<TableMode>(cx, g["table"], "/search/table",
                                       {{"per-pair", TableMode::PerPairIndependent}, {"joint", TableMode::JointOnCycle}});
    if (g.contains("legality"))
      c.search.legality = choice<Legality>(cx, g["legality"], "/search/legality",
                                           {{"consecutive", Legality::Consecutive},
                                            {"all-previous", Legality::AllPrevious}});
    if (g.contains("repetition"))
      c.search.repetition = choice<Repetition>(cx, g["repetition"], "/search/repetition",
                                               {{"permutation", Repetition::PermutationOnly},
                                                {"allowed", Repetition::Allowed}});
  }
  if (j.contains("synthesis")) {
    const json& g = j["synthesis"];
    if (g.contains("form")) {
      try {
        c.form = synth_form_from_string(str(cx, g["form"], "/synthesis/form"));
      } catch (const std::invalid_argument& e) {
        cx.fail("/synthesis/form", e.what());
      }
    }
    if (g.contains("gain_bound")) c.gain_bound = number(cx, g["gain_bound"], "/synthesis/gain_bound");
  }
  if (j.contains("run")) {
    const json& g = j["run"];
    if (g.contains("algo"))
      c.run.algo = choice<Mode>(cx, g["algo"], "/run/algo", {{"gs", Mode::GaussSeidel}, {"pj", Mode::Jacobi}});
    if (g.contains("iters")) {
      double it = number(cx, g["iters"], "/run/iters");
      if (it < 0 || it != std::floor(it)) cx.fail("/run/iters", "must be a nonnegative integer");
      c.run.iters = static_cast<int>(it);
    }
    if (g.contains("sequence"))
      for (double v : numbers(cx, g["sequence"], "/run/sequence")) c.run.sequence.push_back(static_cast<int>(v) - 1);
    if (g.contains("random_order")) c.run.random_order = g["random_order"].get<bool>();
  }
  return c;
}

Config load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path + ":0: " + e.what());
  }
  return parse_config(text, path);
}

SwitchedSystem config_system(const Config& c) { return build_system(c.spec, c.mode); }

VectorXd config_gains(const Config& c) {
  if (c.gains) return *c.gains;
  return nominal_gains(c.spec, build_sector_bounds(c.spec));
}

LinearSwitchedSystem config_linear(const Config& c) { return linearize(config_system(c), config_gains(c)); }

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
    rows.push_back(r);
  }
  return rows;
}

json matrix_to_b64(const MatrixXd& M) {
  std::string bytes(static_cast<std::size_t>(M.size()) * 8, '\0');
  std::size_t off = 0;
  for (int i = 0; i < M.rows(); ++i)
    for (int k = 0; k < M.cols(); ++k) {
      double v = M(i, k);
      std::uint64_t u;
      std::memcpy(&u, &v, 8);
      for (int b = 0; b < 8; ++b) bytes[off++] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"base64", base64_encode(bytes)}};
}

MatrixXd matrix_from_json(const json& j, const std::string& where) {
  std::string at = where.empty() ? "" : where + ": ";
  if (j.is_object()) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("base64"))
      throw std::invalid_argument(at + "matrix object needs rows, cols, base64");
    int r = j["rows"].get<int>(), c = j["cols"].get<int>();
    std::string bytes = base64_decode(j["base64"].get<std::string>());
    if (bytes.size() != static_cast<std::size_t>(r) * c * 8) throw std::invalid_argument(at + "base64 payload size mismatch");
    MatrixXd M(r, c);
    std::size_t off = 0;
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(bytes[off++])) << (8 * b);
        double v;
        std::memcpy(&v, &u, 8);
        M(i, k) = v;
      }
    return M;
  }
  if (!j.is_array()) throw std::invalid_argument(at + "expected a matrix");
  if (j.empty()) return MatrixXd(0, 0);
  if (j[0].is_number()) {
    MatrixXd v(j.size(), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw std::invalid_argument(at + "mixed vector entries");
      v(static_cast<int>(i), 0) = j[i].get<double>();
    }
    return v;
  }
  int r = static_cast<int>(j.size()), c = static_cast<int>(j[0].size());
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != c) throw std::invalid_argument(at + "ragged matrix rows");
    for (int k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) throw std::invalid_argument(at + "non-numeric matrix entry");
      M(i, k) = j[i][k].get<double>();
    }
  }
  return M;
}

static const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& in) {
  std::string out;
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8) | std::uint8_t(in[i + 2]);
    for (int s = 18; s >= 0; s -= 6) out += kB64[(v >> s) & 63];
  }
  if (i < in.size()) {
    std::uint32_t v = std::uint8_t(in[i]) << 16;
    if (i + 1 < in.size()) v |= std::uint8_t(in[i + 1]) << 8;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += i + 1 < in.size() ? kB64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(const std::string& in) {
  std::string out;
  std::uint32_t v = 0;
  int bits = 0;
  for (char ch : in) {
    if (ch == '=' || std::isspace(static_cast<unsigned char>(ch))) continue;
    const char* p = std::strchr(kB64, ch);
    if (!p || !ch) throw std::invalid_argument("invalid base64 character");
    v = (v << 6) | static_cast<std::uint32_t>(p - kB64);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((v >> bits) & 0xff);
    }
  }
  return out;
}

json certificate_to_json(const RateCertificate& c, Mode mode) {
  json j;
  j["method"] = to_string(c.method);
  j["mode"] = mode == Mode::GaussSeidel ? "gs" : "pj";
  j["tau"] = c.tau;
  j["chi"] = c.chi;
  j["margin"] = c.margin;
  j["sector_sign"] = c.sector_sign == SectorSign::Lure ? "lure" : "printed";
  json pairs = json::array();
  for (auto [a, b] : c.pairs) pairs.push_back({a + 1, b + 1});
  j["pairs"] = pairs;
  j["p_index"] = c.p_index;
  json P = json::array();
  for (const auto& M : c.P) P.push_back(matrix_to_json(M));
  j["P"] = P;
  if (c.Gamma.size()) j["Gamma"] = matrix_to_json(c.Gamma);
  json vars = json::array();
  for (const auto& M : c.assignment) vars.push_back(matrix_to_json(M));
  j["assignment"] = vars;
  return j;
}

RateCertificate certificate_from_json(const json& j) {
  RateCertificate c;
  try {
    c.method = method_from_string(j.at("method").get<std::string>());
    c.tau = j.at("tau").get<double>();
    c.chi = j.value("chi", 1.0);
    c.margin = j.value("margin", 0.0);
    c.sector_sign = j.value("sector_sign", std::string("lure")) == "printed" ? SectorSign::Printed : SectorSign::Lure;
    for (const auto& p : j.at("pairs")) c.pairs.emplace_back(p.at(0).get<int>() - 1, p.at(1).get<int>() - 1);
    c.p_index = j.value("p_index", std::vector<int>{});
    for (const auto& M : j.at("P")) c.P.push_back(matrix_from_json(M, "P"));
    if (j.contains("Gamma")) c.Gamma = matrix_from_json(j["Gamma"], "Gamma");
    for (const auto& M : j.at("assignment")) c.assignment.push_back(matrix_from_json(M, "assignment"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("certificate: ") + e.what());
  }
  return c;
}

json controller_to_json(const Controller& c, Mode mode, bool linear, const VectorXd& gains) {
  json j;
  j["format"] = "admmcert-controller-1";
  j["K"] = matrix_to_json(c.K);
  j["form"] = to_string(c.source);
  j["tau_design"] = c.tau_design;
  j["mode"] = mode == Mode::GaussSeidel ? "gs" : "pj";
  j["linear"] = linear;
  if (linear) j["gains"] = std::vector<double>(gains.data(), gains.data() + gains.size());
  j["certificate"] = certificate_to_json(c.certificate, mode);
  return j;
}

ControllerFile controller_from_json(const json& j) {
  ControllerFile f;
  try {
    if (j.value("format", std::string()) != "admmcert-controller-1")
      throw std::invalid_argument("controller: unknown or missing format tag");
    f.controller.K = matrix_from_json(j.at("K"), "K");
    f.controller.source = synth_form_from_string(j.at("form").get<std::string>());
    f.controller.tau_design = j.at("tau_design").get<double>();
    f.mode = j.at("mode").get<std::string>() == "gs" ? Mode::GaussSeidel : Mode::Jacobi;
    f.linear = j.value("linear", false);
    if (f.linear) {
      auto g = j.at("gains").get<std::vector<double>>();
      f.gains = Eigen::Map<VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    }
    f.controller.certificate = certificate_from_json(j.at("certificate"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("controller: ") + e.what());
  }
  return f;
}

json instance_to_json(const Instance& inst) {
  json j;
  j["format"] = "admmcert-instance-1";
  json A = json::array();
  for (const auto& M : inst.A) A.push_back(matrix_to_b64(M));
  j["A"] = A;
  j["q"] = matrix_to_b64(inst.q);
  json ob = json::array();
  for (const auto& o : inst.objectives) ob.push_back(objective_to_json(o));
  j["objectives"] = ob;
  j["alpha"] = inst.alpha;
  j["beta"] = inst.beta;
  j["gamma"] = inst.gamma;
  if (inst.x_star) {
    json xs = json::array();
    for (const auto& x : *inst.x_star) xs.push_back(matrix_to_b64(x));
    j["x_star"] = xs;
  }
  if (inst.lambda_star) j["lambda_star"] = matrix_to_b64(*inst.lambda_star);
  if (inst.planted) j["planted"] = matrix_to_b64(*inst.planted);
  return j;
}

Instance instance_from_json(const json& j, const std::string& where) {
  Ctx cx{where, {}};
  Instance in;
  try {
    in = instance_impl(cx, j, "");
  } catch (const ConfigError& e) {
    throw std::invalid_argument(e.what());
  }
  if (j.contains("beta")) in.beta = j["beta"].get<double>();
  if (j.contains("gamma")) in.gamma = j["gamma"].get<double>();
  if (j.contains("alpha")) in.alpha = j["alpha"].get<std::vector<double>>();
  if (in.alpha.size() != in.A.size()) in.alpha.assign(in.A.size(), 1.0);
  return in;
}

namespace {
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << "iteration,primal_residual,distance,state_norm\n";
  for (int k = 1; k <= t.iterations(); ++k)
    os << k << ',' << num(t.primal_residual[k]) << ',' << num(t.distance[k]) << ',' << num(t.state_norm[k]) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "beta,gamma,alpha,tau\n";
  for (const auto& r : rows)
    os << num(r.beta) << ',' << num(r.gamma) << ',' << num(r.alpha) << ',' << (r.tau ? num(*r.tau) : "inf") << '\n';
}

std::string sweep_svg(const std::vector<SweepRow>& rows) {
  const double W = 640, H = 420, L = 60, R = 150, T = 20, B = 50;
  double bmin = INFINITY, bmax = -INFINITY, tmin = INFINITY, tmax = -INFINITY;
  for (const auto& r : rows) {
    bmin = std::min(bmin, r.beta);
    bmax = std::max(bmax, r.beta);
    if (r.tau) {
      tmin = std::min(tmin, *r.tau);
      tmax = std::max(tmax, *r.tau);
    }
  }
  if (!std::isfinite(tmin)) tmin = 0, tmax = 1;
  if (tmax - tmin < 1e-6) tmin -= 0.01, tmax += 0.01;
  if (bmax - bmin < 1e-12) bmin -= 0.5, bmax += 0.5;
  auto X = [&](double b) { return L + (b - bmin) / (bmax - bmin) * (W - L - R); };
  auto Y = [&](double t) { return H - B - (t - tmin) / (tmax - tmin) * (H - T - B); };
  std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> series;
  for (const auto& r : rows)
    if (r.tau) series[{r.alpha, r.gamma}].emplace_back(r.beta, *r.tau);
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">beta</text>\n";
  os << "<text x=\"14\" y=\"" << (H - B + T) / 2 << "\" transform=\"rotate(-90 14 " << (H - B + T) / 2
     << ")\" text-anchor=\"middle\">tau*</text>\n";
  os << std::setprecision(4);
  for (double t : {tmin, (tmin + tmax) / 2, tmax})
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << t
       << "</text>\n";
  for (double b : {bmin, (bmin + bmax) / 2, bmax})
    os << "<text x=\"" << X(b) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << b
       << "</text>\n";
  int k = 0;
  for (const auto& [key, pts] : series) {
    const char* col = colors[k % 7];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end());
    for (auto [b, t] : sorted) os << X(b) << ',' << Y(t) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"11\" fill=\"" << col
       << "\">alpha=" << key.first << " gamma=" << key.second << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace admmcert
