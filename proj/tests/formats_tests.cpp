#include <doctest.h>

#include "mpcw/formats.hpp"

#include "helpers.hpp"

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace mpcw;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mpcw_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("base64 round trip and reference vectors") {
  // RFC 4648 test vectors
  auto enc = [](const std::string& s) {
    return base64_encode(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foob") == "Zm9vYg==");
  CHECK(enc("fooba") == "Zm9vYmE=");
  CHECK(enc("foobar") == "Zm9vYmFy");

  Rng rng(1);
  for (int len : {1, 2, 3, 64, 1000}) {
    std::vector<std::uint8_t> data(len);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
    auto back = base64_decode(base64_encode(data.data(), data.size()));
    CHECK(back == data);
  }
  CHECK_THROWS_AS(base64_decode("Zg="), ParseError);   // bad padding
  CHECK_THROWS_AS(base64_decode("Z!=="), ParseError);  // bad alphabet
}

TEST_CASE("matrix blobs round trip bit-exactly") {
  Rng rng(2);
  Mat m(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) m(i, j) = rng.normal();
  m(0, 0) = 0.1 + 0.2;  // a value with a non-terminating binary expansion
  Mat back = decode_matrix(encode_matrix(m), 5, 3);
  CHECK((m - back).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(decode_matrix(encode_matrix(m), 4, 3), ParseError);
}

TEST_CASE("model files round trip") {
  TempDir tmp;
  Rng rng(3);
  MlpModel model = init_model({2, 8, 5}, rng);
  model.biases[1] = Vec::NullaryExpr(5, [&](Index) { return rng.normal(); });
  save_model(model, tmp.file("m.txt"), 42);
  MlpModel back = load_model(tmp.file("m.txt"));
  REQUIRE(back.widths == model.widths);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    CHECK((back.weights[l] - model.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.biases[l] - model.biases[l]).cwiseAbs().maxCoeff() == 0.0);
  }

  // corrupted magic line is rejected with a parse error
  {
    std::ofstream f(tmp.file("bad.txt"), std::ios::trunc);
    f << "not-a-model v9\n";
  }
  CHECK_THROWS_AS(load_model(tmp.file("bad.txt")), ParseError);
}

TEST_CASE("dataset files round trip including aux working sets") {
  TempDir tmp;
  Rng rng(4);
  std::vector<SampleRecord> records(3);
  DatasetHeader h;
  h.n = 2;
  h.d_p = 4;
  h.d_eq = 2;
  h.d_in = 6;
  h.count = 3;
  for (auto& rec : records) {
    rec.x = Vec::NullaryExpr(2, [&](Index) { return rng.normal(); });
    rec.z_star = Vec::NullaryExpr(4, [&](Index) { return rng.normal(); });
    rec.nu_star = Vec::NullaryExpr(2, [&](Index) { return rng.normal(); });
    rec.lambda_star = Vec::NullaryExpr(6, [&](Index) { return rng.uniform(); });
    rec.aux = {1u, 4u};
  }
  records[1].aux.clear();
  write_dataset(records, h, tmp.file("d.mpcd"));
  auto [h2, back] = read_dataset(tmp.file("d.mpcd"));
  CHECK(h2.n == h.n);
  CHECK(h2.count == 3);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back[i].x - records[i].x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back[i].z_star - records[i].z_star).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back[i].lambda_star - records[i].lambda_star).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(back[i].aux == records[i].aux);
  }

  // truncated file rejected
  {
    std::ifstream in(tmp.file("d.mpcd"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    std::ofstream out(tmp.file("trunc.mpcd"), std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<long>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(read_dataset(tmp.file("trunc.mpcd")), ParseError);

  // wrong magic rejected
  {
    std::ofstream out(tmp.file("magic.mpcd"), std::ios::binary | std::ios::trunc);
    out << "XXXX garbage";
  }
  CHECK_THROWS_AS(read_dataset(tmp.file("magic.mpcd")), ParseError);
}

TEST_CASE("problem files round trip and hash stability") {
  TempDir tmp;
  LtiProblemSpec spec = build_benchmark(BenchmarkId::Sys1);
  save_problem(spec, tmp.file("p.txt"));
  LtiProblemSpec back = load_problem(tmp.file("p.txt"));
  CHECK((back.model.A - spec.model.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.model.B - spec.model.B).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.P - spec.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.Xf.A_mat - spec.Xf.A_mat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.N == spec.N);
  CHECK(spec_hash(back) == spec_hash(spec));

  // hash is sensitive to the data
  LtiProblemSpec other = spec;
  other.Q(0, 0) += 1.0;
  CHECK(spec_hash(other) != spec_hash(spec));
}
