#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfgan/errors.hpp"
#include "cfgan/generator.hpp"

#include <cmath>

using namespace cfgan;

namespace {

MlpNet linear_d(const Vector& w, double b = 0.0) {
  MlpNet net({LayerSpec::linear(w.size(), 1)});
  net.weights(0) = w.transpose();
  net.bias(0)[0] = b;
  return net;
}

MlpNet tanh_net(Rng& rng, Index in, Index out, double sd) {
  MlpNet net(mlp_layers(in, {6}, out, Activation::kTanh));
  net.init_gaussian(rng, sd);
  return net;
}

MlpNet identity_base(Index dim) {
  MlpNet net({LayerSpec::linear(dim, dim)});
  net.weights(0) = Matrix::Identity(dim, dim);
  return net;
}

}  // namespace

TEST_CASE("scaling factors") {
  CHECK(scaling_factor(Scaling::kUnit, 3.0) == 1.0);
  CHECK(scaling_factor(Scaling::kS0, 0.0) == 0.5);
  CHECK(scaling_factor(Scaling::kS1, 0.0) == 0.5);
  CHECK(scaling_factor(Scaling::kS0, -20.0) < 1e-8);
  CHECK(scaling_factor(Scaling::kS1, -20.0) > 1.0 - 1e-8);
}

TEST_CASE("constant discriminator leaves points in place") {
  MlpNet d({LayerSpec::linear(2, 1)});
  d.bias(0)[0] = 4.0;
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(functional_gradient_step(GradStep{d, 0.5, Scaling::kUnit}, x) == x);
}

TEST_CASE("linear discriminator moves points by eta w") {
  Vector w(2);
  w << 0.3, -0.8;
  Matrix x(2, 2);
  x << 1, 2, -1, 0.5;
  const Matrix y = functional_gradient_step(GradStep{linear_d(w, 1.0), 0.25, Scaling::kUnit}, x);
  CHECK(((y - x).rowwise() - 0.25 * w.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic potentials drive steps too") {
  const AnalyticField quad{[](const Vector& v) { return -0.5 * v.squaredNorm(); },
                           [](const Vector& v) { return Vector(-v); }};
  Vector x(2);
  x << 2.0, -4.0;
  CHECK((functional_gradient_step(GradStep{quad, 0.5, Scaling::kUnit}, x) - 0.5 * x).norm() < 1e-15);
}

TEST_CASE("generator_apply composition") {
  Vector w(2);
  w << 1.0, 2.0;
  GeneratorStack g{identity_base(2), {}};
  Rng rng(31);
  const Matrix z = prior_sample(Prior{2}, rng, 5);
  CHECK(generator_apply(g, z) == z);
  g.steps.push_back(GradStep{linear_d(w), 0.1, Scaling::kUnit});
  CHECK(((generator_apply(g, z) - z).rowwise() - 0.1 * w.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(generator_apply(g, z) == generator_apply(g, z));
  const Vector single = generator_apply(g, Vector(z.row(2).transpose()));
  CHECK((single - generator_apply(g, z).row(2).transpose()).norm() == 0.0);
}

TEST_CASE("pool replay equals full composition") {
  Rng rng(32);
  GeneratorStack g{tanh_net(rng, 3, 2, 0.5), {}};
  const Matrix z = prior_sample(Prior{3}, rng, 64);
  InputPool pool = make_pool(g, z);
  CHECK(pool.stamp == 0);
  const Scaling kinds[] = {Scaling::kUnit, Scaling::kS0, Scaling::kS1};
  for (int t = 0; t < 12; ++t) {
    g.steps.push_back(GradStep{tanh_net(rng, 2, 1, 0.7), 0.2, kinds[t % 3]});
    pool_advance(pool, std::span<const GradStep>(g.steps).subspan(pool.stamp), pool.stamp);
    CHECK((pool.x - generator_apply(g, z)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const Matrix before = pool.x;
  pool_advance(pool, {}, pool.stamp);
  CHECK(pool.x == before);
  CHECK_THROWS_AS(pool_advance(pool, std::span<const GradStep>(g.steps).subspan(0, 1), 0), InternalError);
}

TEST_CASE("steps keep a frozen copy of their discriminator") {
  Vector w = Vector::Ones(2);
  MlpNet d = linear_d(w);
  GradStep step{d, 1.0, Scaling::kUnit};
  d.mutable_params().setZero();
  Matrix x = Matrix::Zero(1, 2);
  CHECK(functional_gradient_step(step, x)(0, 0) == 1.0);
}

TEST_CASE("halving eta finds an ascent step for a frozen discriminator") {
  Rng rng(33);
  const MlpNet d = tanh_net(rng, 2, 1, 1.0);
  const Matrix x = prior_sample(Prior{2}, rng, 200);
  const Vector before = forward_scalar(d, x);
  double eta = 1.0;
  auto ascends = [&](double e) {
    const Vector after = forward_scalar(d, functional_gradient_step(GradStep{d, e, Scaling::kUnit}, x));
    return (after.array() >= before.array()).all();
  };
  for (int k = 0; k < 40 && !ascends(eta); ++k) eta *= 0.5;
  CHECK(eta > 1e-6);
  CHECK(ascends(eta));
}

TEST_CASE("distillation on exact targets is a fixed point") {
  Rng rng(34);
  Approximator a{tanh_net(rng, 2, 2, 0.5), {}, {}};
  const Matrix z = prior_sample(Prior{2}, rng, 100);
  const Matrix targets = forward(a.net, z);
  const Vector before = a.net.params();
  const DistillReport r = approximator_distill(a, z, targets, rng);
  CHECK(r.initial_loss == 0.0);
  CHECK(r.final_loss == 0.0);
  CHECK(a.net.params() == before);
}

TEST_CASE("linear approximator fits a linear map") {
  Rng rng(35);
  MlpNet target({LayerSpec::linear(3, 2)});
  target.init_gaussian(rng, 1.0);
  target.bias(0) << 0.5, -0.25;
  Approximator a{MlpNet({LayerSpec::linear(3, 2)}), {}, {}};
  a.config.learning_rate = 0.01;
  a.config.epoch_cap = 200;
  const Matrix z = prior_sample(Prior{3}, rng, 1000);
  const DistillReport r = approximator_distill(a, z, forward(target, z), rng);
  CHECK(r.final_loss < 1e-3 * r.initial_loss);
  CHECK(r.epochs == 200);
}

TEST_CASE("epoch cap and plateau cut") {
  Rng rng(36);
  Approximator a{tanh_net(rng, 2, 2, 0.5), {}, {}};
  a.config.epoch_cap = 10;
  const Matrix z = prior_sample(Prior{2}, rng, 200);
  const Matrix targets = Matrix::Constant(200, 2, 0.3);
  const DistillReport r = approximator_distill(a, z, targets, rng);
  CHECK(r.epochs == 10);
  CHECK(r.final_loss < r.initial_loss);

  Approximator exact{tanh_net(rng, 2, 2, 0.5), {}, {}};
  const DistillReport flat = approximator_distill(exact, z, forward(exact.net, z), rng);
  CHECK(flat.final_learning_rate == doctest::Approx(exact.config.learning_rate * 1e-10));
  CHECK_THROWS_AS(approximator_distill(a, z, Matrix::Zero(200, 3), rng), ConfigError);
}

TEST_CASE("approximator init") {
  ApproximatorSpec spec;
  spec.hidden = {32, 32};
  spec.init_stddev = 0.1;
  spec.output_act = Activation::kNone;
  Rng rng(37);
  const ApproximatorInit init = approximator_init(Prior{4}, 2, spec, rng);
  CHECK(init.approx.net.input_dim() == 4);
  CHECK(init.approx.net.output_dim() == 2);
  CHECK(init.g_rand.layers().front().kind == LayerKind::kProjection);
  CHECK(init.report.final_loss < init.untrained_loss);
  Rng probe(38);
  CHECK(forward(init.approx.net, prior_sample(Prior{4}, probe, 1000)).cols() == 2);

  Rng again(37);
  CHECK(approximator_init(Prior{4}, 2, spec, again).approx.net == init.approx.net);
  CHECK_THROWS_AS(approximator_init(Prior{0}, 2, spec, rng), ConfigError);
}
