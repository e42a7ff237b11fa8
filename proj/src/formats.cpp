#include "mpcw/formats.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mpcw {
namespace {

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t buf[4] = {static_cast<std::uint8_t>(v),
                         static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 24)};
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t get_u32(std::istream& is, std::size_t& offset) {
  std::uint8_t buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4))
    throw ParseError("unexpected end of file", offset);
  offset += 4;
  return static_cast<std::uint32_t>(buf[0]) |
         (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) |
         (static_cast<std::uint32_t>(buf[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

void put_vec(std::ostream& os, const Vec& v) {
  for (Index i = 0; i < v.size(); ++i) put_f64(os, v(i));
}

Vec get_vec(std::istream& is, Index size, std::size_t& offset) {
  Vec out(size);
  std::uint8_t buf[8];
  for (Index i = 0; i < size; ++i) {
    if (!is.read(reinterpret_cast<char*>(buf), 8))
      throw ParseError("unexpected end of file", offset);
    offset += 8;
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
    double v;
    std::memcpy(&v, &bits, 8);
    out(i) = v;
  }
  return out;
}

/// key: value lines; '#' comments and blank lines skipped.
std::map<std::string, std::string> read_kv_file(const std::string& path,
                                                const std::string& magic) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != magic)
    throw ParseError("bad magic line (expected '" + magic + "')", 0);
  offset += line.size() + 1;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError("missing ':' separator", line_start);
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    kv[key] = value;
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv,
                           const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing field '" + key + "'", 0);
  return it->second;
}

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* data, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const Mat& m) {
  std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                           static_cast<std::uint64_t>(m.cols())};
  h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims));
  return fnv1a(h, reinterpret_cast<const std::uint8_t*>(m.data()),
               sizeof(double) * static_cast<std::size_t>(m.size()));
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (std::size_t i = 0; i < size; i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < size) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < size) chunk |= data[i + 2];
    out.push_back(kB64[(chunk >> 18) & 63]);
    out.push_back(kB64[(chunk >> 12) & 63]);
    out.push_back(i + 1 < size ? kB64[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < size ? kB64[chunk & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0)
    throw ParseError("base64 length not a multiple of 4", text.size());
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=' && k >= 2) {
        vals[k] = 0;
        ++pad;
      } else {
        vals[k] = b64_value(c);
        if (vals[k] < 0 || pad > 0)
          throw ParseError("invalid base64 character", i + k);
      }
    }
    std::uint32_t chunk = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<std::uint8_t>(chunk >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(chunk >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(chunk));
  }
  return out;
}

std::string encode_matrix(const Mat& m) {
  std::vector<std::uint8_t> bytes(sizeof(double) * static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits;
    double v = m.data()[i];
    std::memcpy(&bits, &v, 8);
    for (int k = 0; k < 8; ++k)
      bytes[static_cast<std::size_t>(i) * 8 + k] =
          static_cast<std::uint8_t>(bits >> (8 * k));
  }
  return base64_encode(bytes.data(), bytes.size());
}

Mat decode_matrix(const std::string& text, Index rows, Index cols) {
  std::vector<std::uint8_t> bytes = base64_decode(text);
  if (bytes.size() != sizeof(double) * static_cast<std::size_t>(rows * cols))
    throw ParseError("matrix blob has wrong size", 0);
  Mat out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
      bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i) * 8 + k])
              << (8 * k);
    double v;
    std::memcpy(&v, &bits, 8);
    out.data()[i] = v;
  }
  return out;
}

std::uint64_t spec_hash(const LtiProblemSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  h = hash_matrix(h, spec.model.A);
  h = hash_matrix(h, spec.model.B);
  h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(&spec.model.tau), 8);
  h = hash_matrix(h, spec.Q);
  h = hash_matrix(h, spec.R);
  h = hash_matrix(h, spec.P);
  h = hash_matrix(h, spec.X.A_mat);
  h = hash_matrix(h, Mat(spec.X.b));
  h = hash_matrix(h, spec.U.A_mat);
  h = hash_matrix(h, Mat(spec.U.b));
  h = hash_matrix(h, spec.Xf.A_mat);
  h = hash_matrix(h, Mat(spec.Xf.b));
  std::uint64_t nn = static_cast<std::uint64_t>(spec.N);
  return fnv1a(h, reinterpret_cast<const std::uint8_t*>(&nn), 8);
}

void save_model(const MlpModel& model, const std::string& path,
                std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << "mpcw-model v1\n";
  out << "widths:";
  for (std::size_t i = 0; i < model.widths.size(); ++i)
    out << (i ? "," : " ") << model.widths[i];
  out << "\n";
  out << "seed: " << seed << "\n";
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    out << "W" << l << ": " << encode_matrix(model.weights[l]) << "\n";
    out << "b" << l << ": " << encode_matrix(Mat(model.biases[l])) << "\n";
  }
  if (!out) throw ConfigError("write failure on " + path);
}

MlpModel load_model(const std::string& path) {
  auto kv = read_kv_file(path, "mpcw-model v1");
  MlpModel model;
  std::istringstream ws(require(kv, "widths"));
  std::string tok;
  while (std::getline(ws, tok, ','))
    model.widths.push_back(static_cast<Index>(std::stoll(tok)));
  if (model.widths.size() < 2) throw ParseError("model needs >= 2 widths", 0);
  for (std::size_t l = 0; l + 1 < model.widths.size(); ++l) {
    const Index r = model.widths[l + 1], c = model.widths[l];
    model.weights.push_back(
        decode_matrix(require(kv, "W" + std::to_string(l)), r, c));
    model.biases.push_back(
        Vec(decode_matrix(require(kv, "b" + std::to_string(l)), r, 1)));
  }
  return model;
}

void write_dataset(const std::vector<SampleRecord>& records,
                   const DatasetHeader& dims, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out.write("MPCD", 4);
  out.put(1);  // format version
  put_u32(out, dims.n);
  put_u32(out, dims.d_p);
  put_u32(out, dims.d_eq);
  put_u32(out, dims.d_in);
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.x.size() != dims.n || rec.z_star.size() != dims.d_p ||
        rec.nu_star.size() != dims.d_eq || rec.lambda_star.size() != dims.d_in)
      throw InvalidArgument("write_dataset: record dimension mismatch");
    put_vec(out, rec.x);
    put_vec(out, rec.z_star);
    put_vec(out, rec.nu_star);
    put_vec(out, rec.lambda_star);
    put_u32(out, static_cast<std::uint32_t>(rec.aux.size()));
    for (std::uint32_t i : rec.aux) put_u32(out, i);
  }
  if (!out) throw ConfigError("write failure on " + path);
}

std::pair<DatasetHeader, std::vector<SampleRecord>> read_dataset(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::size_t offset = 0;
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "MPCD")
    throw ParseError("bad dataset magic", 0);
  offset = 4;
  int version = in.get();
  if (version != 1) throw ParseError("unsupported dataset version", offset);
  ++offset;
  DatasetHeader h;
  h.n = get_u32(in, offset);
  h.d_p = get_u32(in, offset);
  h.d_eq = get_u32(in, offset);
  h.d_in = get_u32(in, offset);
  h.count = get_u32(in, offset);
  std::vector<SampleRecord> records;
  records.reserve(h.count);
  for (std::uint32_t r = 0; r < h.count; ++r) {
    SampleRecord rec;
    rec.x = get_vec(in, h.n, offset);
    rec.z_star = get_vec(in, h.d_p, offset);
    rec.nu_star = get_vec(in, h.d_eq, offset);
    rec.lambda_star = get_vec(in, h.d_in, offset);
    std::uint32_t aux_len = get_u32(in, offset);
    if (aux_len > h.d_in) throw ParseError("aux list longer than d_in", offset);
    rec.aux.reserve(aux_len);
    for (std::uint32_t i = 0; i < aux_len; ++i)
      rec.aux.push_back(get_u32(in, offset));
    records.push_back(std::move(rec));
  }
  return {h, std::move(records)};
}

void save_problem(const LtiProblemSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << "mpcw-problem v1\n";
  out << "n: " << spec.n() << "\n";
  out << "m: " << spec.m() << "\n";
  out << "N: " << spec.N << "\n";
  out << "c_x: " << spec.X.rows() << "\n";
  out << "c_u: " << spec.U.rows() << "\n";
  out << "c_f: " << spec.Xf.rows() << "\n";
  out << "tau: " << spec.model.tau << "\n";
  out << "A: " << encode_matrix(spec.model.A) << "\n";
  out << "B: " << encode_matrix(spec.model.B) << "\n";
  out << "Q: " << encode_matrix(spec.Q) << "\n";
  out << "R: " << encode_matrix(spec.R) << "\n";
  out << "P: " << encode_matrix(spec.P) << "\n";
  out << "Ax: " << encode_matrix(spec.X.A_mat) << "\n";
  out << "bx: " << encode_matrix(Mat(spec.X.b)) << "\n";
  out << "Au: " << encode_matrix(spec.U.A_mat) << "\n";
  out << "bu: " << encode_matrix(Mat(spec.U.b)) << "\n";
  out << "Af: " << encode_matrix(spec.Xf.A_mat) << "\n";
  out << "bf: " << encode_matrix(Mat(spec.Xf.b)) << "\n";
  if (!out) throw ConfigError("write failure on " + path);
}

LtiProblemSpec load_problem(const std::string& path) {
  auto kv = read_kv_file(path, "mpcw-problem v1");
  LtiProblemSpec spec;
  const Index n = std::stoll(require(kv, "n"));
  const Index m = std::stoll(require(kv, "m"));
  spec.N = static_cast<int>(std::stoll(require(kv, "N")));
  const Index c_x = std::stoll(require(kv, "c_x"));
  const Index c_u = std::stoll(require(kv, "c_u"));
  const Index c_f = std::stoll(require(kv, "c_f"));
  spec.model.tau = std::stod(require(kv, "tau"));
  spec.model.A = decode_matrix(require(kv, "A"), n, n);
  spec.model.B = decode_matrix(require(kv, "B"), n, m);
  spec.Q = decode_matrix(require(kv, "Q"), n, n);
  spec.R = decode_matrix(require(kv, "R"), m, m);
  spec.P = decode_matrix(require(kv, "P"), n, n);
  spec.X.A_mat = decode_matrix(require(kv, "Ax"), c_x, n);
  spec.X.b = Vec(decode_matrix(require(kv, "bx"), c_x, 1));
  spec.U.A_mat = decode_matrix(require(kv, "Au"), c_u, m);
  spec.U.b = Vec(decode_matrix(require(kv, "bu"), c_u, 1));
  spec.Xf.A_mat = decode_matrix(require(kv, "Af"), c_f, n);
  spec.Xf.b = Vec(decode_matrix(require(kv, "bf"), c_f, 1));
  return spec;
}

}  // namespace mpcw
