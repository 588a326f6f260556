#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mmvb/core/adam.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/core/gradcheck.hpp"
#include "mmvb/core/mlp.hpp"
#include "mmvb/core/ops.hpp"
#include "mmvb/core/serialize.hpp"

using namespace mmvb::core;

TEST_CASE("backward of sum(x) is all ones") {
    Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, /*requires_grad=*/true);
    sum_all(x).backward();
    for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("backward of 0.5*sum(x^2) is x") {
    Tensor x = Tensor::from({2}, {3.0, -2.0}, true);
    scale(sum_all(mul(x, x)), 0.5).backward();
    CHECK(x.grad()[0] == doctest::Approx(3.0));
    CHECK(x.grad()[1] == doctest::Approx(-2.0));
}

TEST_CASE("backward requires a scalar loss") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor y = mul(x, x);
    CHECK_THROWS_AS(y.backward(), mmvb::contract_error);
}

TEST_CASE("repeated backward accumulates gradients") {
    Tensor x = Tensor::from({2}, {1.0, 1.0}, true);
    Tensor loss = sum_all(x);
    loss.backward();
    loss.backward();
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    x.zero_grad();
    loss.backward();
    CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("matmul shapes are validated with both shapes reported") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), mmvb::shape_error);
}

TEST_CASE("identity linear layer reproduces its input") {
    MlpSpec spec{{3, 3}, MlpSpec::Activation::none, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(1);
    init_mlp_params(spec, params, "net", rng);
    auto w = params.get("net.layer0.weight").values();
    std::fill(w.begin(), w.end(), 0.0);
    w[0] = w[4] = w[8] = 1.0;
    auto b = params.get("net.layer0.bias").values();
    std::fill(b.begin(), b.end(), 0.0);
    Tensor x = Tensor::from({1, 3}, {1, 2, 3});
    Tensor y = mlp_forward(spec, params, "net", x);
    CHECK(y.at(0) == doctest::Approx(1));
    CHECK(y.at(1) == doctest::Approx(2));
    CHECK(y.at(2) == doctest::Approx(3));
}

TEST_CASE("zero-initialized weights yield the bias") {
    MlpSpec spec{{3, 2}, MlpSpec::Activation::none, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(1);
    init_mlp_params(spec, params, "net", rng);
    auto w = params.get("net.layer0.weight").values();
    std::fill(w.begin(), w.end(), 0.0);
    auto b = params.get("net.layer0.bias").values();
    b[0] = 0.25;
    b[1] = -0.5;
    Tensor y = mlp_forward(spec, params, "net", Tensor::from({1, 3}, {9, -4, 17}));
    CHECK(y.at(0) == doctest::Approx(0.25));
    CHECK(y.at(1) == doctest::Approx(-0.5));
}

TEST_CASE("two-layer relu net matches a hand-computed forward pass") {
    // h = relu(W1 x + b1), y = W2 h + b2 with
    // W1 = [[1, -1], [2, 0.5]], b1 = [0.5, -3], W2 = [[1], [2]], b2 = [0.25]
    // x = [1, 2]: pre = [1*1+2*2+0.5, -1*1+0.5*2-3] = [5.5, -2] -> h = [5.5, 0]
    // y = 5.5*1 + 0*2 + 0.25 = 5.75
    MlpSpec spec{{2, 2, 1}, MlpSpec::Activation::relu, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(1);
    init_mlp_params(spec, params, "net", rng);
    auto w1 = params.get("net.layer0.weight").values();  // 2x2 row-major (in x out)
    w1[0] = 1;
    w1[1] = -1;
    w1[2] = 2;
    w1[3] = 0.5;
    auto b1 = params.get("net.layer0.bias").values();
    b1[0] = 0.5;
    b1[1] = -3;
    auto w2 = params.get("net.layer1.weight").values();
    w2[0] = 1;
    w2[1] = 2;
    params.get("net.layer1.bias").values()[0] = 0.25;
    Tensor y = mlp_forward(spec, params, "net", Tensor::from({1, 2}, {1, 2}));
    CHECK(y.at(0) == doctest::Approx(5.75));
}

TEST_CASE("mlp input width mismatch reports both shapes") {
    MlpSpec spec{{3, 2}, MlpSpec::Activation::none, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(1);
    init_mlp_params(spec, params, "net", rng);
    CHECK_THROWS_AS(mlp_forward(spec, params, "net", Tensor::zeros({1, 5})),
                    mmvb::shape_error);
}

TEST_CASE("gaussian_pair head splits a doubled final layer") {
    MlpSpec spec{{3, 4}, MlpSpec::Activation::relu, MlpSpec::Heads::gaussian_pair};
    ParamSet params;
    Rng rng(5);
    init_mlp_params(spec, params, "enc", rng);
    CHECK(params.get("enc.layer0.weight").shape() == std::vector<std::size_t>{3, 8});
    auto [mean, logvar] = mlp_forward_gaussian(spec, params, "enc", Tensor::zeros({2, 3}));
    CHECK(mean.shape() == std::vector<std::size_t>{2, 4});
    CHECK(logvar.shape() == std::vector<std::size_t>{2, 4});
}

TEST_CASE("random 3-layer mlp gradients match central finite differences") {
    MlpSpec spec{{4, 6, 5, 3}, MlpSpec::Activation::relu, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(17);
    init_mlp_params(spec, params, "net", rng);
    Tensor x = Tensor::randn({3, 4}, rng);
    auto loss_fn = [&] {
        Tensor y = mlp_forward(spec, params, "net", x);
        return scale(sum_all(mul(y, y)), 0.5);
    };
    auto report = grad_check(params, loss_fn, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("grad_check: plain linear layer is accurate to 1e-7") {
    MlpSpec spec{{5, 3}, MlpSpec::Activation::none, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(23);
    init_mlp_params(spec, params, "net", rng);
    Tensor x = Tensor::randn({2, 5}, rng);
    auto loss_fn = [&] { return mean_all(mlp_forward(spec, params, "net", x)); };
    CHECK(grad_check(params, loss_fn).max_rel_error < 1e-7);
}

TEST_CASE("grad_check: softmax cross-entropy head is accurate to 1e-5") {
    MlpSpec spec{{4, 6, 9}, MlpSpec::Activation::relu, MlpSpec::Heads::single};
    ParamSet params;
    Rng rng(29);
    init_mlp_params(spec, params, "net", rng);
    Tensor x = Tensor::randn({4, 4}, rng);
    // one-hot targets over 3 groups of 3 classes
    std::vector<double> target(4 * 9, 0.0);
    Rng trng(31);
    for (std::size_t row = 0; row < 4; ++row)
        for (std::size_t g = 0; g < 3; ++g)
            target[row * 9 + g * 3 + trng.below(3)] = 1.0;
    Tensor t = Tensor::from({4, 9}, target);
    auto loss_fn = [&] {
        Tensor logits = mlp_forward(spec, params, "net", x);
        Tensor ll = log_softmax_groups(logits, 3);
        return neg(mean_all(row_sum(mul(ll, t))));
    };
    CHECK(grad_check(params, loss_fn).max_rel_error < 1e-5);
}

TEST_CASE("elementary ops pass finite differences at random non-kink points") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        ParamSet params;
        Tensor a = params.add(Tensor::randn({2, 3}, rng), "a");
        Tensor b = params.add(Tensor::randn({2, 3}, rng), "b");
        // keep b away from 0 so div/log are well conditioned
        for (double& v : params.get("b").values()) v = 2.0 + 0.5 * std::tanh(v);
        auto loss_fn = [&] {
            Tensor t = add(mul(a, b), div(a, b));
            t = add(t, exp_t(scale(a, 0.3)));
            t = add(t, log_t(b));
            t = add(t, sigmoid(a));
            return add(mean_all(row_sum(t)), sum_all(mul(t, t)));
        };
        auto report = grad_check(params, loss_fn);
        REQUIRE_MESSAGE(report.max_rel_error < 1e-4,
                        "seed ", seed, " worst=", report.worst_param);
    }
}

TEST_CASE("structural ops (slice/concat/take_rows) propagate gradients") {
    Rng rng(3);
    ParamSet params;
    Tensor a = params.add(Tensor::randn({4, 6}, rng), "a");
    auto loss_fn = [&] {
        Tensor left = slice_cols(a, 0, 2);
        Tensor right = slice_cols(a, 2, 4);
        Tensor joined = concat_cols({right, left});
        Tensor picked = take_rows(joined, {3, 0, 3});
        return mean_all(mul(picked, picked));
    };
    CHECK(grad_check(params, loss_fn).max_rel_error < 1e-6);
}

TEST_CASE("adam with zero gradients is a fixed point") {
    ParamSet params;
    Rng rng(11);
    params.add(Tensor::randn({3, 3}, rng), "w");
    std::vector<double> before(params.get("w").values().begin(),
                               params.get("w").values().end());
    Adam adam(params, {.learning_rate = 1e-2});
    params.zero_grad();
    adam.step(params);
    CHECK(adam.step_count() == 1);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(params.get("w").at(i) == before[i]);
}

TEST_CASE("first adam step moves a scalar parameter by about lr") {
    ParamSet params;
    params.add(Tensor::scalar(1.0), "p");
    Adam adam(params, {.learning_rate = 1e-4});
    params.get("p").grad()[0] = 1.0;
    adam.step(params);
    // mhat/ (sqrt(vhat) + eps) == 1/(1 + eps) on the first step with g = 1
    CHECK(params.get("p").item() == doctest::Approx(1.0 - 1e-4).epsilon(1e-6));
}

TEST_CASE("adam rejects NaN gradients naming the parameter") {
    ParamSet params;
    params.add(Tensor::scalar(1.0), "w.bad");
    Adam adam(params);
    params.get("w.bad").grad()[0] = std::nan("");
    CHECK_THROWS_WITH_AS(adam.step(params), doctest::Contains("w.bad"),
                         mmvb::numeric_error);
}

TEST_CASE("identical seeds give bitwise-identical training trajectories") {
    auto run = [] {
        Rng rng(77);
        MlpSpec spec{{3, 4, 2}, MlpSpec::Activation::relu, MlpSpec::Heads::single};
        ParamSet params;
        init_mlp_params(spec, params, "net", rng);
        Adam adam(params, {.learning_rate = 1e-3});
        for (int step = 0; step < 25; ++step) {
            params.zero_grad();
            Tensor x = Tensor::randn({4, 3}, rng);
            Tensor y = mlp_forward(spec, params, "net", x);
            mean_all(mul(y, y)).backward();
            adam.step(params);
        }
        std::vector<double> flat;
        for (auto& p : params.all())
            flat.insert(flat.end(), p.values().begin(), p.values().end());
        return flat;
    };
    CHECK(run() == run());
}

TEST_CASE("checkpoint round trip restores every parameter") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "mmvb_test_ckpt.bin";
    Rng rng(13);
    MlpSpec spec{{4, 3}, MlpSpec::Activation::none, MlpSpec::Heads::gaussian_pair};

    ParamSet saved;
    init_mlp_params(spec, saved, "enc", rng);
    save_params(path.string(), saved);

    ParamSet loaded;
    Rng rng2(99);
    init_mlp_params(spec, loaded, "enc", rng2);
    load_params(path.string(), loaded);
    for (std::size_t pi = 0; pi < saved.size(); ++pi) {
        const auto& a = saved.all()[pi];
        const auto& b = loaded.all()[pi];
        CHECK(a.name() == b.name());
        for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.at(i) == b.at(i));
    }
    fs::remove(path);
}

TEST_CASE("no-grad guard suppresses taping") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    NoGradGuard guard;
    Tensor y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
}
