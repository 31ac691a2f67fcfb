#include "test_util.hpp"

#include "vqcnir/dbca.hpp"
#include "vqcnir/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace vqcnir;
using testutil::random;

namespace {

using Mat = std::vector<std::vector<double>>;

// x[c][p] for batch b.
Mat plane(const Tensor& x, Index b)
{
    const Index C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Mat m(static_cast<std::size_t>(C), std::vector<double>(static_cast<std::size_t>(HW)));
    for (Index c = 0; c < C; ++c)
        for (Index p = 0; p < HW; ++p)
            m[c][p] = x.data()[static_cast<std::size_t>((b * C + c) * HW + p)];
    return m;
}

Mat norm(const Mat& x, const LayerNorm& ln)
{
    double mu = 0, n = 0;
    for (auto& r : x)
        for (double v : r) {
            mu += v;
            n += 1;
        }
    mu /= n;
    double var = 0;
    for (auto& r : x)
        for (double v : r) var += (v - mu) * (v - mu);
    var /= n;
    Mat y = x;
    for (std::size_t c = 0; c < x.size(); ++c)
        for (auto& v : y[c])
            v = (v - mu) / std::sqrt(var + 1e-6) * ln.gamma.data()[c] + ln.beta.data()[c];
    return y;
}

Mat pointwise(const Mat& x, const Conv2d& conv)
{
    const std::size_t C = x.size();
    Mat y(C, std::vector<double>(x[0].size()));
    for (std::size_t o = 0; o < C; ++o)
        for (std::size_t p = 0; p < x[0].size(); ++p) {
            double s = conv.bias.data()[o];
            for (std::size_t i = 0; i < C; ++i) s += conv.weight.data()[o * C + i] * x[i][p];
            y[o][p] = s;
        }
    return y;
}

struct Expected {
    Mat attention, fd_out, fg_out;
};

Expected oracle(const DBCA& m, const Tensor& fd, const Tensor& fg, Index b)
{
    Mat d = plane(fd, b), g = plane(fg, b);
    Mat nd = norm(d, m.norm_d), ng = norm(g, m.norm_g);
    Mat qd = pointwise(nd, m.query_d), qg = pointwise(ng, m.query_g);
    Mat vd = pointwise(nd, m.value_d), vg = pointwise(ng, m.value_g);
    const std::size_t C = d.size(), HW = d[0].size();
    Mat a(C, std::vector<double>(C));
    for (std::size_t i = 0; i < C; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < C; ++j) {
            double s = 0;
            for (std::size_t p = 0; p < HW; ++p) s += qd[i][p] * qg[j][p];
            a[i][j] = s / std::sqrt(static_cast<double>(C));
            mx = std::max(mx, a[i][j]);
        }
        double z = 0;
        for (auto& v : a[i]) z += (v = std::exp(v - mx));
        for (auto& v : a[i]) v /= z;
    }
    Expected e{a, d, g};
    for (std::size_t i = 0; i < C; ++i)
        for (std::size_t p = 0; p < HW; ++p) {
            double ag = 0, ad = 0;
            for (std::size_t j = 0; j < C; ++j) {
                ag += a[i][j] * vg[j][p];
                ad += a[i][j] * vd[j][p];
            }
            e.fd_out[i][p] += m.gamma_d.data()[i] * ag;
            e.fg_out[i][p] += m.gamma_g.data()[i] * ad;
        }
    return e;
}

void randomize(DBCA& m, Rng& rng)
{
    ParamList params;
    m.collect("dbca", params);
    for (auto& p : params)
        for (double& v : p.tensor.mutable_data()) v = rng.uniform(-0.5, 0.5);
}

double max_diff(const Mat& a, const Tensor& t, Index b)
{
    Mat m = plane(t, b);
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) d = std::max(d, std::abs(a[i][j] - m[i][j]));
    return d;
}

} // namespace

TEST_CASE("cross attention matches an explicit-matrix oracle")
{
    Rng rng(1);
    for (Index C : {1, 4}) {
        DBCA m = DBCA::create(DBCAConfig{C, 3, 7}, rng);
        randomize(m, rng);
        for (double& v : m.gamma_d.mutable_data()) v = 1.0;
        for (double& v : m.gamma_g.mutable_data()) v = 1.0;
        Tensor fd = random({2, C, 3, 3}, rng), fg = random({2, C, 3, 3}, rng);
        auto out = m.cross_attention(fd, fg);
        REQUIRE(out.attention.shape() == Shape{2, C, C});
        for (Index b = 0; b < 2; ++b) {
            Expected e = oracle(m, fd, fg, b);
            double da = 0;
            for (Index i = 0; i < C; ++i)
                for (Index j = 0; j < C; ++j)
                    da = std::max(da, std::abs(e.attention[i][j] -
                                               out.attention.data()[static_cast<std::size_t>((b * C + i) * C + j)]));
            CHECK(da < 1e-12);
            CHECK(max_diff(e.fd_out, out.fd_out, b) < 1e-12);
            CHECK(max_diff(e.fg_out, out.fg_out, b) < 1e-12);
        }
    }
}

TEST_CASE("attention rows sum to one and a single softmax is evaluated per forward")
{
    Rng rng(2);
    DBCA m = DBCA::create(DBCAConfig{6, 3, 7}, rng);
    randomize(m, rng);
    Tensor fd = random({3, 6, 5, 4}, rng, -3, 3), fg = random({3, 6, 5, 4}, rng, -3, 3);
    const auto before = softmax_call_count();
    Tensor y = m(fd, fg);
    CHECK(softmax_call_count() - before == 1);
    auto att = m.cross_attention(fd, fg);
    for (Index r = 0; r < 3 * 6; ++r) {
        double s = 0;
        for (Index j = 0; j < 6; ++j) {
            const double v = att.attention.data()[static_cast<std::size_t>(r * 6 + j)];
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("C=1 attention is exactly one")
{
    Rng rng(3);
    DBCA m = DBCA::create(DBCAConfig{1, 3, 7}, rng);
    randomize(m, rng);
    auto att = m.cross_attention(random({2, 1, 4, 4}, rng), random({2, 1, 4, 4}, rng));
    for (double v : att.attention.data()) CHECK(v == 1.0);
}

TEST_CASE("freshly created DBCA returns F_D")
{
    Rng rng(4);
    DBCA m = DBCA::create(DBCAConfig{4, 3, 7}, rng);
    Tensor fd = random({2, 4, 6, 6}, rng), fg = random({2, 4, 6, 6}, rng);
    CHECK(testutil::bit_equal(m(fd, fg), fd));
}

TEST_CASE("offset estimator emits 2k^2 channels")
{
    Rng rng(5);
    for (Index k : {1, 3, 5}) {
        DBCA m = DBCA::create(DBCAConfig{4, k, 7}, rng);
        randomize(m, rng);
        Tensor off = m.estimate_offsets(random({2, 4, 5, 5}, rng), random({2, 4, 5, 5}, rng));
        CHECK(off.shape() == Shape{2, 2 * k * k, 5, 5});
    }
    CHECK(DBCA::create(DBCAConfig{4, 3, 7}, rng).offset_conv.weight.dim(2) == 7);
    CHECK_THROWS_AS(DBCA::create(DBCAConfig{4, 2, 7}, rng), ConfigError);
    CHECK_THROWS_AS(DBCA::create(DBCAConfig{0, 3, 7}, rng), ConfigError);
}

TEST_CASE("zero offsets reduce DBCA to a plain convolution of the fused feature")
{
    Rng rng(6);
    DBCA m = DBCA::create(DBCAConfig{3, 3, 7}, rng);
    randomize(m, rng);
    for (double& v : m.offset_conv.weight.mutable_data()) v = 0.0;
    for (double& v : m.offset_conv.bias.mutable_data()) v = 0.0;
    Tensor fd = random({2, 3, 5, 6}, rng), fg = random({2, 3, 5, 6}, rng);
    Tensor y = m(fd, fg);
    Tensor fused = m.cross_attention(fd, fg).fd_out;
    Index Ho = 0, Wo = 0;
    auto ref = testutil::naive_conv2d(fused, m.deform_weight, m.deform_bias, 1, 1, 1, 1, Ho, Wo);
    CHECK(testutil::max_abs_diff(y, Tensor::from(y.shape(), ref)) < 1e-12);
}

TEST_CASE("DBCA equals deform_conv2d composed with the offset estimate")
{
    Rng rng(7);
    DBCA m = DBCA::create(DBCAConfig{4, 3, 7}, rng);
    randomize(m, rng);
    Tensor fd = random({1, 4, 6, 6}, rng), fg = random({1, 4, 6, 6}, rng);
    auto att = m.cross_attention(fd, fg);
    Tensor off = m.estimate_offsets(att.fd_out, att.fg_out);
    Tensor ref = deform_conv2d(att.fd_out, off, m.deform_weight, m.deform_bias);
    CHECK(testutil::bit_equal(m(fd, fg), ref));
    CHECK_THROWS_AS(m(fd, random({1, 4, 5, 6}, rng)), DimensionError);
}
