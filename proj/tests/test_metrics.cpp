// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "support/gradcheck.hpp"

#include "mmrf/metrics/image_metrics.hpp"
#include "mmrf/metrics/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace mmrf::metrics {
namespace {

using diff::ParameterStore;
using testing::add_matrix;
using testing::random_matrix;

Matrix row(double a, double b, double c)
{
    Matrix m(1, 3);
    m << a, b, c;
    return m;
}

TEST(Losses, WorkedExamples)
{
    EXPECT_EQ(loss_rgb(row(0.2, 0.3, 0.4), row(0.2, 0.3, 0.4)), 0.0);
    EXPECT_DOUBLE_EQ(loss_rgb(row(0.5, 0, 0), row(0, 0, 0)), 0.25);
    Matrix two(2, 3);
    two << 1, 0, 0, 0, 0, 0;
    EXPECT_DOUBLE_EQ(loss_rgb(two, Matrix::Zero(2, 3)), 0.5);
    EXPECT_DOUBLE_EQ(loss_thermal(row(0.3, 0.4, 0.3), row(0.3, 0.3, 0.3)), 0.01);
    EXPECT_EQ(loss_reg(row(0.1, 0.2, 0.3), row(0.1, 0.2, 0.3), row(0.1, 0.2, 0.3)), 0.0);
    EXPECT_DOUBLE_EQ(loss_reg(row(0.5, 0.5, 0.5), row(0.5, 0.5, 0.5), row(1, 0.5, 0.5)), 0.25);
    EXPECT_THROW(loss_rgb(Matrix(0, 3), Matrix(0, 3)), ContractError);
    EXPECT_THROW(loss_rgb(row(0, 0, 0), two), ContractError);
}

TEST(Losses, RegGradientAtWorkedExample)
{
    ParameterStore store;
    const auto id = add_matrix(store, "th", row(0.5, 0.5, 0.5));
    diff::Tape tape(&store);
    const Var l = loss_reg(tape, tape.parameter(id), row(0.5, 0.5, 0.5), row(1, 0.5, 0.5));
    EXPECT_DOUBLE_EQ(tape.scalar(l), 0.25);
    tape.backward(l);
    const auto g = store.grad(id);
    EXPECT_DOUBLE_EQ(g[0], -1.0);
    EXPECT_EQ(g[1], 0.0);
    EXPECT_EQ(g[2], 0.0);
}

TEST(Losses, TapeMatchesPlainAndDuplicationInvariant)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index r = 1 + trial % 7;
        const Matrix a = random_matrix(rng, r, 3, 0, 1);
        const Matrix b = random_matrix(rng, r, 3, 0, 1);
        const Matrix c = random_matrix(rng, r, 3, 0, 1);
        diff::Tape tape;
        EXPECT_DOUBLE_EQ(tape.scalar(loss_rgb(tape, tape.constant(a), b)), loss_rgb(a, b));
        EXPECT_DOUBLE_EQ(tape.scalar(loss_reg(tape, tape.constant(a), b, c)), loss_reg(a, b, c));
        EXPECT_GE(loss_thermal(a, b), 0.0);
        Matrix a2(2 * r, 3), b2(2 * r, 3);
        a2 << a, a;
        b2 << b, b;
        EXPECT_NEAR(loss_thermal(a2, b2), loss_thermal(a, b), 1e-15);
    }
}

TEST(Losses, TruthPerturbationMovesValueNotGradientTargets)
{
    std::mt19937_64 rng(12);
    ParameterStore store;
    const Matrix rendered = random_matrix(rng, 4, 3, 0, 1);
    const auto id = add_matrix(store, "th", rendered);
    Matrix truth_rgb = random_matrix(rng, 4, 3, 0, 1);
    const Matrix truth_ev = random_matrix(rng, 4, 3, 0, 1);
    diff::Tape tape(&store);
    const Var l0 = loss_reg(tape, tape.parameter(id), truth_rgb, truth_ev);
    tape.backward(l0);
    // The only trainable leaf is the rendered value; truths enter as constants.
    EXPECT_EQ(store.size(), 1u);
    truth_rgb(0, 0) += 0.1;
    EXPECT_NE(loss_reg(rendered, truth_rgb, truth_ev), tape.scalar(l0));
    // Analytic gradient 2·((r − t_rgb) + (r − t_ev))/R.
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double want = 2 * ((rendered(i, j) - (truth_rgb(i, j) - (i == 0 && j == 0 ? 0.1 : 0))) +
                                     (rendered(i, j) - truth_ev(i, j))) / 4;
            EXPECT_NEAR(store.grad(id)[i * 3 + j], want, 1e-15);
        }
}

TEST(TotalLoss, UnitWeightsSum)
{
    EXPECT_DOUBLE_EQ(total_loss(LossWeights{}, 0.5, 0.25, 0.25), 1.0);
    LossWeights w;
    w.enable_reg = false;
    EXPECT_DOUBLE_EQ(total_loss(w, 0.5, 0.25, 123.0), 0.75);
    w.w_th = 2;
    EXPECT_DOUBLE_EQ(total_loss(w, 0.5, 0.25, 123.0), 1.0);
}

struct Rig {
    ParameterStore store;
    std::vector<diff::ParamId> ids;
    Supervision truth;

    explicit Rig(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        truth.rgb = random_matrix(rng, 6, 3, 0, 1);
        truth.thermal = random_matrix(rng, 6, 3, 0, 1);
        truth.events = random_matrix(rng, 6, 3, 0, 1);
        for (const char* name : {"rgb0", "xs0", "rgb1", "xs1"})
            ids.push_back(add_matrix(store, name, random_matrix(rng, 6, 3, 0, 1)));
    }

    double run(const LossWeights& w, LossResult* out = nullptr, bool strict = false)
    {
        store.zero_grads();
        diff::Tape tape(&store);
        std::vector<PassPrediction> passes{{tape.parameter(ids[0]), tape.parameter(ids[1])},
                                           {tape.parameter(ids[2]), tape.parameter(ids[3])}};
        auto r = total_loss(tape, w, passes, truth, strict);
        tape.backward(r.total);
        const double v = tape.scalar(r.total);
        if (out)
            *out = std::move(r);
        return v;
    }

    std::vector<double> grads() const
    {
        std::vector<double> g;
        for (auto id : ids)
            for (double v : store.grad(id))
                g.push_back(v);
        return g;
    }
};

TEST(TotalLoss, SumsTermsOverPasses)
{
    Rig rig(13);
    LossResult r;
    LossWeights w{0.7, 1.3, 0.4};
    const double v = rig.run(w, &r);
    ASSERT_EQ(r.per_pass.size(), 2u);
    double want = 0;
    for (int p = 0; p < 2; ++p) {
        const Matrix rgb = Eigen::Map<const Matrix>(rig.store.value(rig.ids[2 * p]).data(), 6, 3);
        const Matrix xs = Eigen::Map<const Matrix>(rig.store.value(rig.ids[2 * p + 1]).data(), 6, 3);
        EXPECT_DOUBLE_EQ(r.per_pass[p].rgb, loss_rgb(rgb, rig.truth.rgb));
        EXPECT_DOUBLE_EQ(r.per_pass[p].thermal, loss_thermal(xs, rig.truth.thermal));
        EXPECT_DOUBLE_EQ(r.per_pass[p].reg, loss_reg(xs, rig.truth.rgb, rig.truth.events));
        want += 0.7 * r.per_pass[p].rgb + 1.3 * r.per_pass[p].thermal + 0.4 * r.per_pass[p].reg;
    }
    EXPECT_NEAR(v, want, 1e-14);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(TotalLoss, DisabledTermContributesNothing)
{
    Rig rig(14);
    LossWeights off;
    off.w_reg = 0;
    const double v0 = rig.run(off);
    const auto g0 = rig.grads();
    LossWeights disabled;
    disabled.enable_reg = false;
    disabled.w_reg = 5;
    EXPECT_EQ(rig.run(disabled), v0);
    EXPECT_EQ(rig.grads(), g0);
    // Moving the event truth only matters through the regulariser.
    rig.truth.events.setConstant(0.9);
    EXPECT_EQ(rig.run(disabled), v0);
    EXPECT_EQ(rig.grads(), g0);

    LossWeights rgb_only;
    rgb_only.enable_th = false;
    rgb_only.enable_reg = false;
    rig.run(rgb_only);
    for (double g : rig.store.grad(rig.ids[1]))
        EXPECT_EQ(g, 0.0);
    for (double g : rig.store.grad(rig.ids[3]))
        EXPECT_EQ(g, 0.0);
}

TEST(TotalLoss, HalvingWeightsHalvesEverything)
{
    Rig rig(15);
    const LossWeights full{1.2, 0.6, 0.8};
    const double v = rig.run(full);
    const auto g = rig.grads();
    const double h = rig.run({0.6, 0.3, 0.4});
    const auto gh = rig.grads();
    EXPECT_NEAR(h, v / 2, 1e-15);
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_NEAR(gh[i], g[i] / 2, 1e-15);
}

TEST(TotalLoss, MissingModalities)
{
    Rig rig(16);
    rig.truth.has_events = false;
    LossResult r;
    rig.run({}, &r);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_THROW(rig.run({}, nullptr, true), ContractError);
    LossWeights none;
    none.enable_rgb = none.enable_th = none.enable_reg = false;
    EXPECT_THROW(rig.run(none), ContractError);
    rig.truth.has_events = true;
    rig.truth.rgb(0, 0) = 1.5;
    EXPECT_THROW(rig.run({}), ContractError);
}

TEST(LossWeights, ValidationAndJson)
{
    EXPECT_THROW((LossWeights{-1, 1, 1}.validate()), ContractError);
    EXPECT_THROW((LossWeights{1, std::nan(""), 1}.validate()), ContractError);
    LossWeights w{0.5, 2, 0};
    w.reg_rgb_part = false;
    EXPECT_EQ(loss_weights_from_json(to_json(w)), w);
}

TEST(Ablation, SubsetTable)
{
    struct Row {
        const char* name;
        bool rgb, th, reg, reg_rgb;
    };
    const Row table[] = {{"rgb", true, false, false, true},
                         {"rgb+events", true, false, true, true},
                         {"rgb+thermal", true, true, false, true},
                         {"thermal", false, true, false, true},
                         {"thermal+events", false, true, true, false},
                         {"all", true, true, true, true}};
    ASSERT_EQ(kAllAblations.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto a = kAllAblations[i];
        EXPECT_EQ(to_string(a), table[i].name);
        EXPECT_EQ(ablation_from_string(table[i].name), a);
        const auto w = ablation_weights(a, {2, 3, 4});
        EXPECT_EQ(w.enable_rgb, table[i].rgb) << table[i].name;
        EXPECT_EQ(w.enable_th, table[i].th) << table[i].name;
        EXPECT_EQ(w.enable_reg, table[i].reg) << table[i].name;
        EXPECT_EQ(w.w_rgb, table[i].rgb ? 2.0 : 0.0);
        EXPECT_EQ(w.w_th, table[i].th ? 3.0 : 0.0);
        EXPECT_EQ(w.w_reg, table[i].reg ? 4.0 : 0.0);
        if (table[i].reg) {
            EXPECT_EQ(w.reg_rgb_part, table[i].reg_rgb) << table[i].name;
            EXPECT_TRUE(w.reg_event_part);
        }
    }
    EXPECT_THROW(ablation_from_string("depth"), ContractError);
}

ImageF filled(int w, int h, int c, double v) { return ImageF(w, h, c, v); }

TEST(Psnr, Examples)
{
    ImageF a = filled(10, 10, 1, 0.5);
    ImageF b = a;
    for (auto& v : b.data)
        v += 0.1;
    EXPECT_NEAR(mse(a, b), 0.01, 1e-15);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
    EXPECT_EQ(psnr_from_mse(0.01), 20.0);
    EXPECT_EQ(psnr_from_mse(0.0), std::numeric_limits<double>::infinity());
    EXPECT_THROW(psnr_from_mse(-1.0), ContractError);
    for (std::size_t i = 0; i < b.data.size(); ++i)
        b.data[i] = a.data[i] + 0.01;
    EXPECT_NEAR(psnr(a, b), 40.0, 1e-9);
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
    EXPECT_EQ(psnr_capped(a, a), 99.0);
    EXPECT_NEAR(psnr(a, b, 255.0), 40.0 + 20 * std::log10(255.0), 1e-9);
    EXPECT_THROW(psnr(a, filled(10, 9, 1, 0.5)), ContractError);
}

// Direct evaluation: every valid window position sums the full 2-D Gaussian.
double naive_ssim(const ImageF& a, const ImageF& b, int win, double sigma, double range)
{
    std::vector<double> k(static_cast<std::size_t>(win * win));
    double norm = 0;
    const double mid = (win - 1) / 2.0;
    for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i)
            norm += k[j * win + i] = std::exp(-((i - mid) * (i - mid) + (j - mid) * (j - mid)) / (2 * sigma * sigma));
    for (auto& v : k)
        v /= norm;
    const double c1 = std::pow(0.01 * range, 2);
    const double c2 = std::pow(0.03 * range, 2);
    double total = 0;
    for (int c = 0; c < a.channels; ++c) {
        double sum = 0;
        int count = 0;
        for (int y0 = 0; y0 + win <= a.height; ++y0)
            for (int x0 = 0; x0 + win <= a.width; ++x0) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int j = 0; j < win; ++j)
                    for (int i = 0; i < win; ++i) {
                        const double wgt = k[j * win + i];
                        const double x = a.at(x0 + i, y0 + j, c);
                        const double y = b.at(x0 + i, y0 + j, c);
                        ma += wgt * x;
                        mb += wgt * y;
                        saa += wgt * x * x;
                        sbb += wgt * y * y;
                        sab += wgt * x * y;
                    }
                const double va = saa - ma * ma;
                const double vb = sbb - mb * mb;
                const double cov = sab - ma * mb;
                sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        total += sum / count;
    }
    return total / a.channels;
}

TEST(Ssim, ClosedFormsAndSymmetry)
{
    const ImageF zero = filled(16, 16, 1, 0.0);
    const ImageF one = filled(16, 16, 1, 1.0);
    const double c1 = 1e-4;
    EXPECT_NEAR(ssim(zero, one), c1 / (1 + c1), 1e-9);
    std::mt19937_64 rng(17);
    ImageF a(20, 14, 3), b(20, 14, 3);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : a.data)
        v = u(rng);
    for (auto& v : b.data)
        v = u(rng);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_EQ(ssim(a, b), ssim(b, a));
    EXPECT_NEAR(ssim(a, b), naive_ssim(a, b, 11, 1.5, 1.0), 1e-12);
    SsimOptions opt;
    opt.window = 7;
    opt.sigma = 1.0;
    opt.dynamic_range = 2.0;
    EXPECT_NEAR(ssim(a, b, opt), naive_ssim(a, b, 7, 1.0, 2.0), 1e-12);
}

TEST(Ssim, Errors)
{
    EXPECT_THROW(ssim(filled(10, 20, 1, 0), filled(10, 20, 1, 0)), ContractError);
    EXPECT_THROW(ssim(filled(12, 12, 1, 0), filled(12, 12, 3, 0)), ContractError);
}

} // namespace
} // namespace mmrf::metrics
