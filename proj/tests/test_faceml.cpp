#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>

#include "common/bytes.hpp"
#include "common/error.hpp"
#include "support/expect.hpp"
#include "faceml/calibration.hpp"
#include "faceml/eigenface.hpp"
#include "faceml/jacobi.hpp"
#include "faceml/pgm.hpp"
#include "support/synth.hpp"

using namespace facekey;
using namespace facekey::faceml;
using facekey::testing::code_of;
using facekey::testing::random_raster;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Eigenvalues of (1/M) A A^T computed by Eigen on the explicit D x D matrix.
std::vector<double> covariance_eigenvalues(std::span<const FaceRaster> samples) {
  const auto d = samples[0].dimension();
  const auto m = samples.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) mean += Eigen::Map<const Eigen::VectorXd>(s.pixels().data(), d);
  mean /= static_cast<double>(m);
  Eigen::MatrixXd a(d, m);
  for (std::size_t j = 0; j < m; ++j) {
    a.col(j) = Eigen::Map<const Eigen::VectorXd>(samples[j].pixels().data(), d) - mean;
  }
  Eigen::MatrixXd cov = a * a.transpose() / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  std::vector<double> values(solver.eigenvalues().data(), solver.eigenvalues().data() + d);
  std::sort(values.rbegin(), values.rend());
  return values;
}

std::vector<FaceRaster> random_set(std::mt19937_64& rng, std::size_t m, std::size_t size) {
  std::vector<FaceRaster> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(random_raster(rng, size));
  return out;
}

}  // namespace

TEST_SUITE("raster") {
  TEST_CASE("normalized 64x64 input passes through unchanged") {
    std::mt19937_64 rng(1);
    GrayImage img{64, 64, std::vector<double>(64 * 64)};
    std::uniform_real_distribution<double> unit(0, 1);
    for (auto& v : img.pixels) v = unit(rng);
    img.pixels[7] = 0.0;
    img.pixels[99] = 1.0;
    const auto r = normalize_raster(img, 64);
    REQUIRE(r.size() == 64);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(r.pixels()[i] == doctest::Approx(img.pixels[i]).epsilon(1e-15));
  }

  TEST_CASE("constant images map to zeros") {
    const auto r = normalize_raster(GrayImage{1, 1, {0.37}}, 64);
    CHECK(r.size() == 64);
    CHECK(std::all_of(r.pixels().begin(), r.pixels().end(), [](double v) { return v == 0.0; }));
  }

  TEST_CASE("checkerboard downsample keeps the mean (box-average oracle)") {
    GrayImage img{128, 128, std::vector<double>(128 * 128)};
    for (std::size_t y = 0; y < 128; ++y)
      for (std::size_t x = 0; x < 128; ++x) img.pixels[y * 128 + x] = ((x + y) % 2) ? 1.0 : 0.0;
    // Independent naive 2x2 box average.
    double box_mean = 0;
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 64; ++x) {
        double s = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) s += img.pixels[(2 * y + dy) * 128 + 2 * x + dx];
        box_mean += s / 4;
      }
    box_mean /= 64 * 64;
    const auto r = normalize_raster(img, 64);
    double mean = 0;
    for (double v : r.pixels()) mean += v;
    mean /= r.dimension();
    CHECK(std::abs(mean - box_mean) <= 0.02);
  }

  TEST_CASE("invalid inputs") {
    CHECK(code_of([] { normalize_raster(GrayImage{0, 0, {}}); }) == ErrorCode::InvalidImage);
    CHECK(code_of([] { FaceRaster(2, {0.1, 0.2, 0.3}); }) == ErrorCode::InvalidImage);
    CHECK(code_of([] { FaceRaster(1, {1.5}); }) == ErrorCode::InvalidImage);
  }
}

TEST_SUITE("pgm") {
  TEST_CASE("binary encoding golden bytes") {
    const FaceRaster r(2, {0.0, 1.0, 0.5, 0.2});
    const auto bytes = encode_pgm(r);
    const std::string header = "P5\n2 2\n255\n";
    REQUIRE(bytes.size() == header.size() + 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
    // round(0.5*255) = 128, round(0.2*255) = 51
    CHECK(std::vector<int>(bytes.begin() + header.size(), bytes.end()) == std::vector<int>{0, 255, 128, 51});
  }

  TEST_CASE("P5 and P2 decode, comments, 16-bit") {
    const std::string ascii = "P2\n# a comment\n3 1\n4\n0 2 4\n";
    auto img = decode_pgm(as_bytes(ascii));
    CHECK(img.width == 3);
    CHECK(img.pixels == std::vector<double>{0.0, 0.5, 1.0});

    std::string wide = "P5 1 1 65535\n";
    wide += '\x80';
    wide += '\x00';
    img = decode_pgm(as_bytes(wide));
    CHECK(img.pixels[0] == doctest::Approx(32768.0 / 65535.0));

    const FaceRaster r(2, {0.0, 1.0, 0.5, 0.2});
    const auto back = decode_pgm(encode_pgm(r));
    CHECK(back.width == 2);
    CHECK(back.pixels[1] == 1.0);
  }

  TEST_CASE("malformed inputs") {
    CHECK(code_of([] { decode_pgm(as_bytes("hello")); }) == ErrorCode::MalformedImage);
    CHECK(code_of([] { decode_pgm(as_bytes("P5\n2 2\n255\n\x01")); }) == ErrorCode::MalformedImage);
    CHECK(code_of([] { decode_pgm(as_bytes("P2\n1 1\n3\n9\n")); }) == ErrorCode::MalformedImage);
    CHECK(code_of([] { decode_pgm(as_bytes("P5\n0 2\n255\n")); }) == ErrorCode::MalformedImage);
    CHECK(code_of([] { read_pgm("/nonexistent/face.pgm"); }) == ErrorCode::InvalidImage);
  }
}

TEST_SUITE("jacobi") {
  TEST_CASE("matches Eigen on random symmetric matrices") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + trial % 9;
      Eigen::MatrixXd m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
      std::vector<double> flat(m.data(), m.data() + n * n);
      const auto ours = jacobi_eigen(flat, n);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(ours.values[i] == doctest::Approx(ref.eigenvalues()[n - 1 - i]).epsilon(1e-10));
        // A v = lambda v
        Eigen::VectorXd v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = ours.vector_component(r, i);
        CHECK((m * v - ours.values[i] * v).norm() < 1e-9);
      }
    }
  }
}

TEST_SUITE("eigenfaces") {
  TEST_CASE("two points define one positive axis") {
    // 2x2 analogue of x1=(0,0), x2=(2,2): all-zero and all-one rasters.
    std::vector<FaceRaster> s{FaceRaster(2, {0, 0, 0, 0}), FaceRaster(2, {1, 1, 1, 1})};
    const auto model = train_model(s, 1);
    REQUIRE(model.components() == 1);
    for (double v : model.mean()) CHECK(v == doctest::Approx(0.5));
    for (double v : model.component(0)) CHECK(v == doctest::Approx(0.5));
    // lambda = ||x - mean||^2 summed / M = (4 * 0.25 * 2) / 2
    CHECK(model.eigenvalues()[0] == doctest::Approx(1.0));
  }

  TEST_CASE("completeness: reconstruction recovers centered training images") {
    std::mt19937_64 rng(11);
    const auto samples = random_set(rng, 6, 4);
    const auto model = train_model(samples, 5);
    REQUIRE(model.components() == 5);
    for (const auto& s : samples) {
      const auto e = project(model, s);
      CHECK(e.dffs <= 1e-6);
      for (std::size_t j = 0; j < model.dimension(); ++j) {
        double rec = 0;
        for (std::size_t i = 0; i < model.components(); ++i) rec += e.weights[i] * model.component(i)[j];
        CHECK(rec == doctest::Approx(s.pixels()[j] - model.mean()[j]).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("Gram-trick eigenvalues equal the direct covariance spectrum") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
      // D <= 8 would need a non-square raster; 2x2 (D=4) and 5 samples of 3x3 (D=9) cover both regimes.
      const std::size_t size = trial % 2 ? 2 : 3;
      const std::size_t m = 2 + trial % 5;
      const auto samples = random_set(rng, m, size);
      const auto fit = fit_eigenfaces(samples, {});
      const auto direct = covariance_eigenvalues(samples);
      for (std::size_t i = 0; i < fit.model.components(); ++i) {
        CHECK(std::abs(fit.model.eigenvalues()[i] - direct[i]) <= 1e-8 * std::max(1.0, direct[0]));
      }
    }
  }

  TEST_CASE("orthonormal basis, ordering, energy and determinism") {
    std::mt19937_64 rng(3);
    const auto samples = random_set(rng, 12, 8);
    const auto fit = fit_eigenfaces(samples, {});
    const auto& model = fit.model;
    for (std::size_t i = 0; i < model.components(); ++i) {
      for (std::size_t j = 0; j < model.components(); ++j) {
        CHECK(std::abs(dot(model.component(i), model.component(j)) - (i == j ? 1.0 : 0.0)) < 1e-9);
      }
      if (i + 1 < model.components()) CHECK(model.eigenvalues()[i] >= model.eigenvalues()[i + 1]);
      // Sign convention: largest-magnitude coordinate (lowest index on ties) is positive.
      const auto c = model.component(i);
      std::size_t arg = 0;
      for (std::size_t j = 1; j < c.size(); ++j)
        if (std::abs(c[j]) > std::abs(c[arg])) arg = j;
      CHECK(c[arg] > 0);
    }
    double energy = 0;
    for (const auto& s : samples)
      for (std::size_t j = 0; j < s.dimension(); ++j) {
        const double d = s.pixels()[j] - model.mean()[j];
        energy += d * d;
      }
    double spectrum = 0;
    for (double l : fit.spectrum) spectrum += l;
    CHECK(std::abs(energy - samples.size() * spectrum) <= 1e-6 * energy);

    const auto again = fit_eigenfaces(samples, {});
    CHECK(encode_model(again.model) == encode_model(model));
  }

  TEST_CASE("component selection: cap and energy fraction") {
    std::mt19937_64 rng(9);
    const auto samples = random_set(rng, 10, 6);
    const auto full = fit_eigenfaces(samples, {});
    CHECK(full.model.components() == 9);
    CHECK(fit_eigenfaces(samples, {3, 1.0}).model.components() == 3);
    const auto trimmed = fit_eigenfaces(samples, {0, kDefaultEnergyFraction});
    double total = 0, kept = 0;
    for (double l : full.spectrum) total += l;
    for (double l : trimmed.model.eigenvalues()) kept += l;
    CHECK(kept / total >= kDefaultEnergyFraction);
    const auto k = trimmed.model.components();
    CHECK((kept - trimmed.model.eigenvalues()[k - 1]) / total < kDefaultEnergyFraction);
  }

  TEST_CASE("training preconditions") {
    std::mt19937_64 rng(2);
    const auto one = random_set(rng, 1, 4);
    CHECK(code_of([&] { train_model(one, 1); }) == ErrorCode::InsufficientSamples);
    const std::vector<FaceRaster> same(3, one[0]);
    CHECK(code_of([&] { train_model(same, 2); }) == ErrorCode::DegenerateTrainingSet);
    std::vector<FaceRaster> mixed{random_raster(rng, 4), random_raster(rng, 5)};
    CHECK(code_of([&] { train_model(mixed, 1); }) == ErrorCode::RasterMismatch);
  }

  TEST_CASE("projection: mean face, Pythagoras, mismatch") {
    std::mt19937_64 rng(13);
    const auto samples = random_set(rng, 8, 6);
    const auto model = train_model(samples, 4);
    const FaceRaster mean(6, std::vector<double>(model.mean().begin(), model.mean().end()));
    const auto e0 = project(model, mean);
    for (double w : e0.weights) CHECK(std::abs(w) < 1e-12);
    CHECK(e0.dffs < 1e-12);

    for (int t = 0; t < 50; ++t) {
      const auto x = random_raster(rng, 6);
      const auto e = project(model, x);
      double norm2 = 0;
      for (std::size_t j = 0; j < x.dimension(); ++j) {
        const double d = x.pixels()[j] - model.mean()[j];
        norm2 += d * d;
      }
      CHECK(std::abs(norm2 - (dot(e.weights, e.weights) + e.dffs * e.dffs)) <= 1e-9);
    }
    CHECK(code_of([&] { project(model, random_raster(rng, 5)); }) == ErrorCode::RasterMismatch);
  }

  TEST_CASE("embedding distance") {
    Embedding a{{0, 0}, 0}, b{{3, 4}, 0};
    CHECK(embedding_distance(a, b) == 5.0);
    CHECK(embedding_distance(b, b) == 0.0);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0, 2);
    for (int t = 0; t < 200; ++t) {
      Embedding x{{g(rng), g(rng), g(rng)}, 0}, y{{g(rng), g(rng), g(rng)}, 0};
      double s = 0;
      for (int i = 0; i < 3; ++i) s += (x.weights[i] - y.weights[i]) * (x.weights[i] - y.weights[i]);
      CHECK(std::abs(embedding_distance(x, y) - std::sqrt(s)) <= 1e-12);
      CHECK(embedding_distance(x, y) == embedding_distance(y, x));
    }
    CHECK(code_of([] { embedding_distance(Embedding{{1}, 0}, Embedding{{1, 2}, 0}); }) ==
          ErrorCode::EmbeddingMismatch);
  }
}

TEST_SUITE("model file") {
  TEST_CASE("EFM1 golden layout and bit-exact round trip") {
    const EigenfaceModel model(2, {0.5, 0.25, 0.125, 1.0}, {0.5, 0.5, 0.5, 0.5}, {2.5}, 2);
    // Independent little-endian writer.
    std::vector<std::uint8_t> expect{'E', 'F', 'M', '1'};
    auto u32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) expect.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto f64 = [&](double d) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      for (int i = 0; i < 8; ++i) expect.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    };
    u32(2);
    u32(1);
    u32(2);
    for (double d : {0.5, 0.25, 0.125, 1.0}) f64(d);
    f64(2.5);
    for (int i = 0; i < 4; ++i) f64(0.5);
    CHECK(encode_model(model) == expect);
    CHECK(decode_model(expect) == model);

    std::mt19937_64 rng(21);
    const auto trained = train_model(random_set(rng, 7, 5), 4);
    CHECK(decode_model(encode_model(trained)) == trained);
  }

  TEST_CASE("corrupt files") {
    CHECK(code_of([] { decode_model(as_bytes("EFM2")); }) == ErrorCode::StorageFailure);
    const EigenfaceModel model(2, {0.5, 0.25, 0.125, 1.0}, {0.5, 0.5, 0.5, 0.5}, {2.5}, 2);
    auto bytes = encode_model(model);
    bytes.pop_back();
    CHECK(code_of([&] { decode_model(bytes); }) == ErrorCode::StorageFailure);
  }
}

TEST_SUITE("calibration") {
  TEST_CASE("thresholds separate genuine noise from other identities") {
    std::mt19937_64 rng(31);
    const std::size_t size = 16;
    std::vector<FaceRaster> samples;
    std::vector<std::string> labels;
    for (int id = 0; id < 6; ++id) {
      const auto base = testing::base_pattern(rng, size);
      for (int i = 0; i < 4; ++i) {
        samples.push_back(testing::raster_of(testing::noisy(base, size, 0.05, rng), size));
        labels.push_back("id" + std::to_string(id));
      }
    }
    const ComponentSelection sel{0, kDefaultEnergyFraction};
    const auto model = fit_eigenfaces(samples, sel).model;
    const auto t = calibrate_thresholds(model, samples, labels, sel);
    CHECK(t.accept > 0);
    CHECK(t.face > 0);
    // Intra-identity distances sit well below cross-identity ones.
    std::vector<double> cross;
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (std::size_t j = i + 1; j < samples.size(); ++j)
        if (labels[i] != labels[j]) cross.push_back(embedding_distance(project(model, samples[i]), project(model, samples[j])));
    CHECK(t.accept < *std::min_element(cross.begin(), cross.end()));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  }
}
