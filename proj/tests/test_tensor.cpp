#include "test_util.hpp"

#include "vqcnir/errors.hpp"
#include "vqcnir/gradcheck.hpp"

#include <doctest.h>

using namespace vqcnir;
using testutil::random;

TEST_CASE("tensor factories check element counts")
{
    CHECK_THROWS_AS(Tensor::from({2, 3}, {1.0, 2.0}), DimensionError);
    Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(t.numel() == 4);
    CHECK(t.at({1, 0}) == 3.0);
    CHECK_THROWS_AS(t.at({2, 0}), DimensionError);
    CHECK_THROWS_AS(t.item(), ContractError);
}

TEST_CASE("gradient of sum is all ones")
{
    Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    backward(sum(x));
    for (double g : x.grad()) {
        CHECK(g == 1.0);
    }
}

TEST_CASE("gradient of sum of squares is 2x")
{
    Rng rng(3);
    Tensor x = random({4, 5}, rng, -2, 2, true);
    backward(sum(mul(x, x)));
    REQUIRE(x.grad().size() == x.data().size());
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        CHECK(x.grad()[i] == 2.0 * x.data()[i]);
    }
}

TEST_CASE("backward rejects non-scalar and constant losses")
{
    Tensor x = Tensor::from({3}, {1, 2, 3}, true);
    CHECK_THROWS_AS(backward(mul(x, x)), ContractError);
    Tape::active().clear();
    Tensor c = Tensor::from({1}, {2.0});
    CHECK_THROWS_AS(backward(c), ContractError);
}

TEST_CASE("leaves without requires_grad get no buffer")
{
    Tensor x = Tensor::from({3}, {1, 2, 3}, true);
    Tensor y = Tensor::from({3}, {4, 5, 6});
    backward(sum(mul(x, y)));
    CHECK(x.has_grad());
    CHECK_FALSE(y.has_grad());
    CHECK(x.grad()[1] == 5.0);
}

TEST_CASE("gradients accumulate across uses and the tape is cleared")
{
    Tensor x = Tensor::from({1}, {3.0}, true);
    backward(add(mul(x, x), scale(x, 4.0)));
    CHECK(x.grad()[0] == 10.0);
    CHECK(Tape::active().size() == 0);
}

TEST_CASE("no-grad guard suppresses recording")
{
    Tensor x = Tensor::from({2}, {1, 2}, true);
    {
        NoGradGuard guard;
        Tensor y = mul(x, x);
        CHECK_FALSE(y.requires_grad());
        CHECK(Tape::active().size() == 0);
    }
    CHECK(grad_enabled());
}

TEST_CASE("stop_gradient passes values and blocks gradients")
{
    Tensor x = Tensor::from({2}, {1, 2}, true);
    Tensor y = stop_gradient(x);
    CHECK(testutil::bit_equal(x.detach(), y));
    backward(sum(add(mul(y, x), x)));
    CHECK(x.grad()[0] == 2.0);
    CHECK(x.grad()[1] == 3.0);
}

TEST_CASE("composite graph gradients match finite differences")
{
    Rng rng(11);
    Tensor x = random({2, 2, 5, 5}, rng, -1, 1, true);
    Tensor w = random({3, 2, 3, 3}, rng, -1, 1, true);
    Tensor b = random({3}, rng, -1, 1, true);
    Tensor g = random({3}, rng, 0.5, 1.5, true);
    Tensor be = random({3}, rng, -1, 1, true);
    GradcheckProblem p{{x, w, b, g, be}, [=] {
                           Tensor h = layer_norm(conv2d(x, w, b, {1, 1, 1, 1}), g, be);
                           return softmax(reshape(h, {2, 3, 25}), -1);
                       }};
    CHECK(gradcheck_problem(p, rng, {}) < 1e-4);
}

TEST_CASE("forward and backward are bit-identical for identical seeds")
{
    auto run = [] {
        Rng rng(5);
        Tensor x = random({1, 3, 6, 6}, rng, -1, 1, true);
        Tensor w = random({4, 3, 3, 3}, rng, -1, 1, true);
        Tensor y = sigmoid(conv2d(x, w, Tensor(), {1, 1, 1, 1}));
        backward(sum(mul(y, y)));
        std::vector<double> out(y.data().begin(), y.data().end());
        out.insert(out.end(), w.grad().begin(), w.grad().end());
        out.insert(out.end(), x.grad().begin(), x.grad().end());
        return out;
    };
    CHECK(run() == run());
}
