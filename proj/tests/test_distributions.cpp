#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfgan/distributions.hpp"
#include "cfgan/errors.hpp"
#include "cfgan/finite_diff.hpp"
#include "cfgan/metrics.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace cfgan;

namespace {

GaussianMixture two_bumps(double offset) {
  Vector a(1), b(1), s(1);
  a << -offset;
  b << offset;
  s << 1.0;
  return GaussianMixture({{0.5, a, s}, {0.5, b, s}});
}

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> out;
  for (std::uint32_t v : {magic, n, rows, cols}) {
    const auto b = be32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

}  // namespace

TEST_CASE("standard normal pdf at zero") {
  CHECK(standard_gaussian(1).pdf(Vector::Zero(1)) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(mixture_pdf(standard_gaussian(1), Vector::Zero(1)) == doctest::Approx(0.3989423).epsilon(1e-7));
}

TEST_CASE("symmetric pair at the midpoint equals one component at that distance") {
  const GaussianMixture m = two_bumps(1.5);
  Vector d(1);
  d << 1.5;
  CHECK(m.pdf(Vector::Zero(1)) == doctest::Approx(standard_gaussian(1).pdf(d)).epsilon(1e-14));
  CHECK(std::abs(m.grad_log_pdf(Vector::Zero(1))[0]) < 1e-15);
}

TEST_CASE("weights must sum to one and stddevs be positive") {
  Vector m = Vector::Zero(1), s = Vector::Ones(1);
  CHECK_THROWS_AS(GaussianMixture({{0.5, m, s}}), ConfigError);
  CHECK_THROWS_AS(GaussianMixture({{1.0, m, Vector::Zero(1)}}), ConfigError);
  CHECK_THROWS_AS(GaussianMixture({{0.5, m, s}, {0.5, Vector::Zero(2), Vector::Ones(2)}}), ConfigError);
}

TEST_CASE("2D mixture integrates to one on the grid") {
  for (const GaussianMixture& m : {ring_mixture(8, 2.0, 0.3), standard_gaussian(2)}) {
    const Grid grid = Grid::cube(2, -10.0, 10.0, 0.05);
    const Vector values = m.log_pdf(grid.points()).array().exp();
    CHECK(std::abs(grid_integral(grid, values) - 1.0) <= 1e-6);
  }
}

TEST_CASE("grad log pdf of a standard normal is -x") {
  Vector x(3);
  x << 0.3, -1.2, 2.0;
  CHECK((standard_gaussian(3).grad_log_pdf(x) + x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("grad log pdf agrees with finite differences on a random mixture") {
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.4, 1.5);
  std::vector<GaussianMixture::Component> comps;
  for (int k = 0; k < 3; ++k) {
    Vector mu(2), s(2);
    mu << normal(rng), normal(rng);
    s << unif(rng), unif(rng);
    comps.push_back({1.0 / 3.0, mu, s});
  }
  comps[2].weight = 1.0 - 2.0 / 3.0;
  const GaussianMixture m(comps);
  for (int i = 0; i < 20; ++i) {
    Vector x(2);
    x << normal(rng), normal(rng);
    const Vector fd = finite_diff_grad([&](const Vector& v) { return m.log_pdf(v); }, x, 1e-5);
    CHECK((m.grad_log_pdf(x) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("responsibilities sum to one") {
  const GaussianMixture m = ring_mixture();
  Vector x(2);
  x << 1.0, 1.3;
  CHECK(m.responsibilities(x).sum() == doctest::Approx(1.0));
}

TEST_CASE("sample mean of 1e5 standard normal draws") {
  Rng rng(4);
  const Matrix s = mixture_sample(standard_gaussian(1), rng, 100000);
  CHECK(std::abs(s.mean()) < 0.02);
}

TEST_CASE("a zero-weight component is never drawn") {
  Vector a = Vector::Zero(1), b = Vector::Constant(1, 50.0), s = Vector::Ones(1);
  const GaussianMixture m({{1.0, a, s}, {0.0, b, s}});
  Rng rng(5);
  const LabelledSample ls = mixture_sample_labelled(m, rng, 5000);
  for (int label : ls.labels) CHECK(label == 0);
  CHECK(ls.points.maxCoeff() < 10.0);
}

TEST_CASE("sampling is deterministic for a seed") {
  Rng a(6), b(6);
  CHECK(mixture_sample(ring_mixture(), a, 100) == mixture_sample(ring_mixture(), b, 100));
  Rng c(6), d(6);
  CHECK(prior_sample(Prior{5}, c, 100) == prior_sample(Prior{5}, d, 100));
}

TEST_CASE("ring component frequencies pass a chi-square test") {
  Rng rng(7);
  const LabelledSample ls = mixture_sample_labelled(ring_mixture(), rng, 8000);
  std::vector<int> counts(8, 0);
  for (int l : ls.labels) ++counts[static_cast<std::size_t>(l)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  CHECK(chi2 < 24.32);  // 7 dof, p = 0.001
}

TEST_CASE("ring samples sit on the ring") {
  Rng rng(8);
  const Matrix s = mixture_sample(ring_mixture(8, 2.0, 0.02), rng, 1000);
  const Vector r = s.rowwise().norm();
  CHECK(r.minCoeff() > 1.85);
  CHECK(r.maxCoeff() < 2.15);
}

TEST_CASE("prior samples have the right shape and moments") {
  Rng rng(9);
  const Matrix z = prior_sample(Prior{4}, rng, 100000);
  CHECK(z.cols() == 4);
  CHECK(z.rows() == 100000);
  const Vector mean = z.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
  const Vector var = (z.rowwise() - mean.transpose()).array().square().colwise().mean();
  CHECK((var.array() - 1.0).abs().maxCoeff() < 0.03);
  CHECK_THROWS_AS(prior_sample(Prior{4}, rng, 0), ConfigError);
}

TEST_CASE("IDX images map bytes to [-1, 1]") {
  const auto dir = test::scratch_dir("idx");
  std::vector<unsigned char> pixels(32);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<unsigned char>(i * 8);
  pixels[0] = 0;
  pixels[31] = 255;
  test::write_bytes(dir / "img", idx_images(0x803, 2, 4, 4, pixels));
  std::vector<unsigned char> labels = be32(0x801);
  for (auto b : be32(2)) labels.push_back(b);
  labels.push_back(3);
  labels.push_back(7);
  test::write_bytes(dir / "lab", labels);

  const RealDataset ds = load_idx((dir / "img").string(), (dir / "lab").string());
  CHECK(ds.points.rows() == 2);
  CHECK(ds.points.cols() == 16);
  CHECK(ds.points(0, 0) == -1.0);
  CHECK(ds.points(1, 15) == 1.0);
  CHECK(ds.points.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(ds.labels == std::vector<int>{3, 7});
}

TEST_CASE("IDX errors carry byte offsets") {
  const auto dir = test::scratch_dir("idx_bad");
  test::write_bytes(dir / "magic", idx_images(0x801, 1, 2, 2, {0, 0, 0, 0}));
  try {
    load_idx((dir / "magic").string());
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(e.offset() == 0);
  }

  test::write_bytes(dir / "short", idx_images(0x803, 2, 2, 2, {1, 2, 3}));
  try {
    load_idx((dir / "short").string());
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(e.offset() == 19);
  }

  test::write_bytes(dir / "huge", idx_images(0x803, 0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu, {}));
  CHECK_THROWS_AS(load_idx((dir / "huge").string()), IngestionError);

  test::write_bytes(dir / "header", {0, 0, 8});
  CHECK_THROWS_AS(load_idx((dir / "header").string()), IngestionError);
}
