#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "concord/tensor.hpp"

using namespace concord;

TEST_CASE("splitmix64 stream is the published sequence") {
    Rng rng(0);
    // frozen from an independent evaluation of the stated recurrence
    CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("first uniform from seed 0") {
    Rng rng(0);
    const double u = rng.next_uniform();
    CHECK(u == doctest::Approx(0.8833108082136426).epsilon(1e-12));
}

TEST_CASE("uniforms live in [0,1) and streams are reproducible") {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
        Rng a(seed), b(seed);
        for (int i = 0; i < 1000; ++i) {
            CHECK(a.next_u64() == b.next_u64());
            const double u = a.next_uniform();
            b.next_uniform();
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
        }
    }
}

TEST_CASE("matmul identity and hand-computed product") {
    const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    const Tensor i = Tensor::identity(2);
    CHECK(matmul(a, i).data == a.data);

    const Tensor b = Tensor::matrix(2, 1, {5, 6});
    const Tensor c = matmul(a, b);
    CHECK(c.shape == std::vector<std::size_t>{2, 1});
    CHECK(c.data[0] == 17.0);
    CHECK(c.data[1] == 39.0);
}

TEST_CASE("matmul associativity on random 4x4") {
    Rng rng(7);
    auto random_matrix = [&](std::size_t n, std::size_t m) {
        Tensor t = Tensor::zeros({n, m});
        for (double& v : t.data) v = rng.next_uniform(-2.0, 2.0);
        return t;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor a = random_matrix(4, 4), b = random_matrix(4, 4), c = random_matrix(4, 4);
        const Tensor left = matmul(matmul(a, b), c);
        const Tensor right = matmul(a, matmul(b, c));
        for (std::size_t k = 0; k < left.size(); ++k)
            CHECK(left.data[k] == doctest::Approx(right.data[k]).epsilon(1e-9));
    }
}

TEST_CASE("matmul rejects mismatched shapes, naming both") {
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({2, 3});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("elementwise ops") {
    const Tensor x = Tensor::vector_of({0.0});
    CHECK(sigmoid(x).data[0] == 0.5);
    CHECK(relu(Tensor::vector_of({-3.0})).data[0] == 0.0);
    CHECK(relu(Tensor::vector_of({3.0})).data[0] == 3.0);
    // frozen from reference math evaluation
    CHECK(tanh(Tensor::vector_of({0.5})).data[0] ==
          doctest::Approx(0.46211715726000974).epsilon(1e-12));

    const Tensor a = Tensor::vector_of({1, 2});
    const Tensor b = Tensor::vector_of({3, 4});
    CHECK(add(a, b).data == std::vector<double>{4, 6});
    CHECK(mul(a, b).data == std::vector<double>{3, 8});
    CHECK_THROWS_AS(add(a, Tensor::vector_of({1, 2, 3})), DimensionError);
}

TEST_CASE("softmax symmetry, stability, reference values") {
    const Tensor flat = softmax(Tensor::matrix(1, 3, {0, 0, 0}));
    for (double v : flat.data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

    const Tensor big = softmax(Tensor::matrix(1, 3, {1000, 0, 0}));
    CHECK(std::isfinite(big.data[0]));
    CHECK(big.data[0] == doctest::Approx(1.0).epsilon(1e-12));

    // frozen from independent evaluation of exp(x)/sum(exp)
    const Tensor ref = softmax(Tensor::matrix(1, 3, {1, 2, 3}));
    CHECK(ref.data[0] == doctest::Approx(0.09003057317038046).epsilon(1e-9));
    CHECK(ref.data[1] == doctest::Approx(0.24472847105479764).epsilon(1e-9));
    CHECK(ref.data[2] == doctest::Approx(0.6652409557748218).epsilon(1e-9));
}

TEST_CASE("softmax rows sum to one and shift invariance") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor logits = Tensor::zeros({3, 4});
        for (double& v : logits.data) v = rng.next_uniform(-30.0, 30.0);
        const Tensor p = softmax(logits);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) sum += p.at(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
        const double shift = rng.next_uniform(-5.0, 5.0);
        const Tensor q = softmax(map(logits, [&](double v) { return v + shift; }));
        for (std::size_t k = 0; k < p.size(); ++k)
            CHECK(p.data[k] == doctest::Approx(q.data[k]).epsilon(1e-12));
    }
}

TEST_CASE("glorot uniform bounds, determinism, mean") {
    Rng a(3);
    const Tensor w = glorot_uniform(a, 3, 3);  // L = sqrt(6/6) = 1
    for (double v : w.data) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    Rng b(3);
    CHECK(glorot_uniform(b, 3, 3).data == w.data);

    Rng c(12345);
    const Tensor big = glorot_uniform(c, 100, 100);  // 10000 draws, fan 50/50-like
    double mean = 0.0;
    for (double v : big.data) mean += v;
    mean /= static_cast<double>(big.size());
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("output shapes are pure functions of input shapes") {
    Rng rng(5);
    Tensor a = Tensor::zeros({3, 4});
    Tensor b = Tensor::zeros({4, 2});
    for (double& v : a.data) v = rng.next_uniform(-1, 1);
    for (double& v : b.data) v = rng.next_uniform(-1, 1);
    CHECK(matmul(a, b).shape == std::vector<std::size_t>{3, 2});
    CHECK(transpose(a).shape == std::vector<std::size_t>{4, 3});
    CHECK(softmax(Tensor::zeros({5, 3})).shape == std::vector<std::size_t>{5, 3});
    CHECK(vecmat(Tensor::zeros({4}), b).shape == std::vector<std::size_t>{2});
    CHECK(outer(Tensor::zeros({3}), Tensor::zeros({2})).shape == std::vector<std::size_t>{3, 2});
}
