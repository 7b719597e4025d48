#include <gtest/gtest.h>

#include <sstream>

#include "admmcert/io.hpp"
#include "fixtures.hpp"

using namespace admmcert;

namespace {

const char* kCounter = R"({
  "mode": "pj",
  "beta": 1, "gamma": 1, "alpha": 1,
  "blocks": [
    {"sigma_max": 1.7320508075688772, "objective": {"kind": "quadratic", "c": 0.05}},
    {"sigma_max": 2.449489742783178, "objective": {"kind": "quadratic", "c": 0.05}},
    {"sigma_max": 3.0, "objective": {"kind": "quadratic", "c": 0.05}}
  ]
})";

std::string what(const std::string& text) {
  try {
    parse_config(text, "c.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, PointerLines) {
  auto l = json_pointer_lines(kCounter);
  EXPECT_EQ(l.at("/mode"), 2);
  EXPECT_EQ(l.at("/blocks/1/sigma_max"), 6);
  EXPECT_EQ(l.at("/blocks/2/objective/c"), 7);
}

TEST(Io, ParsesConfig) {
  auto c = parse_config(kCounter);
  EXPECT_EQ(c.spec.n_blocks(), 3);
  EXPECT_EQ(c.spec.alpha.size(), 3u);
  EXPECT_EQ(c.mode, Mode::Jacobi);
  EXPECT_DOUBLE_EQ(c.spec.blocks[2].sigma_min, 3.0);
}

TEST(Io, LineAnchoredErrors) {
  std::string bad = kCounter;
  bad.replace(bad.find("\"beta\": 1"), 9, "\"beta\": -1");
  EXPECT_EQ(what(bad).rfind("c.json:3: /beta:", 0), 0u) << what(bad);
  std::string syntax = kCounter;
  syntax.replace(syntax.find("\"c\": 0.05}},\n    {\"sigma_max\": 3.0"), 4, "\"c\" ");
  EXPECT_EQ(what(syntax).rfind("c.json:6:", 0), 0u) << what(syntax);
  std::string kind = kCounter;
  kind.replace(kind.rfind("quadratic"), 9, "cubic");
  EXPECT_EQ(what(kind).rfind("c.json:7: /blocks/2/objective/kind", 0), 0u) << what(kind);
  EXPECT_NE(what(R"({"blocks": [], "alpha": 1, "bogus": 2})").find("/bogus: unknown key"), std::string::npos);
}

TEST(Io, Base64) {
  EXPECT_EQ(base64_encode("Man"), "TWFu");
  EXPECT_EQ(base64_encode("Ma"), "TWE=");
  EXPECT_EQ(base64_encode("M"), "TQ==");
  EXPECT_EQ(base64_decode("TWE="), "Ma");
}

TEST(Io, MatrixRoundTrip) {
  MatrixXd M(2, 3);
  M << 1.0 / 3, -2e-300, 5, 0.1, 7, -8.25;
  EXPECT_EQ(matrix_from_json(matrix_to_b64(M)), M);
  EXPECT_EQ(matrix_from_json(json::parse(matrix_to_json(M).dump())), M);
}

TEST(Io, InstanceRoundTrip) {
  GenerateOptions g;
  g.m = 12;
  g.n_total = 6;
  g.n_blocks = 2;
  g.p = 3;
  auto in = generate_instance(g);
  auto back = instance_from_json(json::parse(instance_to_json(in).dump()));
  ASSERT_EQ(back.A.size(), in.A.size());
  for (std::size_t i = 0; i < in.A.size(); ++i) EXPECT_EQ(back.A[i], in.A[i]);
  EXPECT_EQ(back.q, in.q);
  EXPECT_EQ(*back.planted, *in.planted);
}

TEST(Io, CertificateRoundTripVerifies) {
  auto sys = build_system(fixtures::experiment1(), Mode::Jacobi);
  auto out = certify(sys, 0.9, Method::Thm1);
  ASSERT_TRUE(out.cert);
  auto back = certificate_from_json(json::parse(certificate_to_json(*out.cert, sys.mode).dump()));
  EXPECT_TRUE(verify_certificate(sys, back).ok);
  back.assignment[0] *= -1.0;
  EXPECT_FALSE(verify_certificate(sys, back).ok);
}

TEST(Io, ControllerRoundTripVerifies) {
  auto c = parse_config(kCounter);
  auto lin = config_linear(c);
  auto out = synthesize_linear(lin, 0.9, SynthForm::C6);
  ASSERT_TRUE(out.controller);
  auto j = json::parse(controller_to_json(*out.controller, c.mode, true, config_gains(c)).dump());
  auto f = controller_from_json(j);
  EXPECT_TRUE(f.linear);
  EXPECT_TRUE(verify_controller(linearize(config_system(c), f.gains), f.controller).ok);
  f.controller.K(0, 0) += 5.0;
  EXPECT_FALSE(verify_controller(linearize(config_system(c), f.gains), f.controller).ok);
}

TEST(Io, CsvOutputs) {
  Trajectory t;
  t.primal_residual = {1.0};
  t.distance = {1.0};
  t.state_norm = {1.0};
  std::ostringstream os;
  write_trajectory_csv(os, t);
  EXPECT_EQ(os.str(), "iteration,primal_residual,distance,state_norm\n");
  std::ostringstream ss;
  write_sweep_csv(ss, {{0.5, 1, 10, 0.9}, {0.5, 1, 20, std::nullopt}});
  EXPECT_EQ(ss.str(), "beta,gamma,alpha,tau\n0.5,1,10,0.9\n0.5,1,20,inf\n");
  EXPECT_NE(sweep_svg({{0.1, 1, 10, 0.9}, {0.5, 1, 10, 0.95}}).find("<polyline"), std::string::npos);
}

TEST(Io, InlineInstanceConfig) {
  auto c = parse_config(R"({
    "alpha": 1,
    "instance": {
      "A": [[1, 1, 1], [1, 1, 2], [1, 2, 2]],
      "q": [0, 0, 0],
      "objectives": [{"kind": "quadratic", "c": 0.05}, {"kind": "quadratic", "c": 0.05},
                     {"kind": "quadratic", "c": 0.05}]
    }
  })");
  ASSERT_TRUE(c.instance);
  EXPECT_EQ(c.instance->A[1].rows(), 3);
  EXPECT_NEAR(c.spec.blocks[2].sigma_max, 3.0, 1e-12);
}
