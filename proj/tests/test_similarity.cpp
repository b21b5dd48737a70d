#include <doctest.h>

#include "motifcode/error.hpp"
#include "motifcode/similarity.hpp"
#include "test_support.hpp"

using namespace motif;
using namespace testutil;

namespace {

Mat from_rows(const std::vector<std::vector<float>>& rows) {
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c)
            m.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return m;
}

Template one_basis(int d = 1, double weight = 1.0) {
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, d, weight}};
    tighten(tpl);
    return tpl;
}

Mat random_roll(Rng& rng, int rows, int cols, double density = 0.08) {
    Mat m(rows, cols);
    int notes = static_cast<int>(rows * cols * density / 3);
    for (int i = 0; i < notes; ++i) {
        int r = uniform_int(rng, 0, rows - 1);
        int c = uniform_int(rng, 0, cols - 4);
        int d = uniform_int(rng, 1, 4);
        float v = static_cast<float>(uniform_int(rng, 1, 127)) / 127.0f;
        for (int k = 0; k < d; ++k) m.at(r, c + k) = v;
    }
    return m;
}

} // namespace

TEST_CASE("zncc of identical windows is 1") {
    Mat tpl = from_rows({{1, 0, 0.5f}, {0, 1, 0}});
    Mat roll(6, 8);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) roll.at(2 + r, 3 + c) = tpl.at(r, c);
    CHECK(zncc(roll, tpl, 2, 3) == doctest::Approx(1.0));
}

TEST_CASE("zncc of the complement pattern is -1") {
    Mat tpl = from_rows({{1, 0}, {0, 1}});
    Mat window = from_rows({{0, 1}, {1, 0}});
    CHECK(zncc(window, tpl, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("zncc zero-variance convention is 0") {
    Mat tpl = from_rows({{1, 0}, {0, 1}});
    Mat zero(4, 4);
    CHECK(zncc(zero, tpl, 0, 0) == 0.0);
    Mat flat_tpl = from_rows({{0.5f, 0.5f}});
    Mat roll = from_rows({{1, 0, 1}});
    CHECK(zncc(roll, flat_tpl, 0, 0) == 0.0);
}

TEST_CASE("rmse basics") {
    Mat tpl = from_rows({{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}});
    Mat same = tpl;
    CHECK(rmse(same, tpl, 0, 0) == 0.0);
    Mat zeros(2, 5);
    CHECK(rmse(zeros, tpl, 0, 0) == doctest::Approx(1.0));
    Mat window(5, 5);
    Mat tpl5(5, 5);
    tpl5.at(2, 2) = 1.0f;
    CHECK(rmse(window, tpl5, 0, 0) == doctest::Approx(0.2));  // sqrt(1/25)
}

TEST_CASE("bacc on a one-basis exact match is 0.5") {
    Template tpl = one_basis(1);
    RenderResult rr = render(tpl, 1, 1, 0, 0);
    Mat roll = from_rows({{1}});
    CHECK(bacc(roll, rr.image, 1, 0, 0) == doctest::Approx(0.5));
}

TEST_CASE("bacc of an empty window is 0") {
    Template tpl = one_basis(2);
    RenderResult rr = render(tpl, 1, 2, 0, 0);
    Mat roll(4, 8);
    CHECK(bacc(roll, rr.image, 1, 0, 0) == 0.0);
}

TEST_CASE("bacc normalizes by bases plus window notes") {
    // two bases, durations 2, exactly matching a 2-note window: 4/(2+2)
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, 2, 1.0}, Basis{1, 2, 2, 1.0}};
    tighten(tpl);
    RenderResult rr = render(tpl, tpl.height, tpl.width, 0, 0);
    CHECK(bacc(rr.image, rr.image, 2, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("bacc over- and under-coverage penalties") {
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, 2, 1.0}, Basis{1, 2, 2, 1.0}};
    tighten(tpl);
    RenderResult rr = render(tpl, 4, 6, 0, 0);
    Mat window = rr.image;  // perfect match inside a 4x6 window
    double base = bacc(window, rr.image, 2, 0, 0);

    Mat extra = window;  // an added note off the template support
    extra.at(3, 5) = 1.0f;
    CHECK(bacc(extra, rr.image, 2, 0, 0) < base);

    Mat missing = window;  // a deleted matched note
    missing.at(2, 1) = 0.0f;
    missing.at(2, 2) = 0.0f;
    CHECK(bacc(missing, rr.image, 2, 0, 0) < base);
}

TEST_CASE("response map finds the true placement under RMSE") {
    Rng rng = make_rng(2);
    PlantOptions opt;
    Template tpl = random_template(rng, 0, opt);
    PianoRoll roll = make_roll(24, 40);
    paint_max(tpl, roll.data, 7, 13);
    ResponseMap map = response_map(roll, tpl, TransformParams{0}, Measure::RMSE);
    CHECK(map.values.at(7, 13) == doctest::Approx(0.0));
    for (int r = 0; r < map.values.rows(); ++r)
        for (int c = 0; c < map.values.cols(); ++c)
            CHECK(map.values.at(r, c) >= -1e-9);
}

TEST_CASE("all-zero roll gives an all-zero BACC map") {
    Template tpl = one_basis(2);
    PianoRoll roll = make_roll(8, 16);
    ResponseMap map = response_map(roll, tpl, TransformParams{0}, Measure::BACC);
    CHECK(map.values.sum() == 0.0);
}

TEST_CASE("template larger than the roll is an error") {
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, 30, 1.0}, Basis{0, 1, 1, 1.0}};
    tighten(tpl);
    PianoRoll roll = make_roll(8, 16);
    CHECK_THROWS_AS(response_map(roll, tpl, TransformParams{0}, Measure::BACC),
                    InputError);
}

TEST_CASE("diffuse raises the score of a one-column miss") {
    Template tpl = one_basis(1);
    PianoRoll roll = make_roll(16, 16);
    roll.data.at(8, 8) = 1.0f;
    TransformParams id{0};
    ResponseMap sharp = response_map(roll, tpl, id, Measure::BACC);
    ResponseMap soft =
        response_map(roll, tpl, id, Measure::BACC, DiffuseConfig{5, 2.0});
    CHECK(sharp.values.at(8, 7) == doctest::Approx(0.0));
    CHECK(soft.values.at(8, 7) > sharp.values.at(8, 7));
    // counts still come from the sharp roll: the exact placement denominator
    // is n_T + 1 in both
    CHECK(soft.values.at(8, 8) > 0.0);
}

TEST_CASE("gaussian kernel is normalized: blur conserves mass away from edges") {
    Mat m(32, 32);
    m.at(16, 16) = 1.0f;
    Mat blurred = gaussian_blur(m, DiffuseConfig{5, 2.0});
    CHECK(blurred.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(blurred.at(16, 16) > blurred.at(16, 15));
    CHECK(blurred.at(16, 15) > blurred.at(16, 14));
}

TEST_CASE("response maps equal direct evaluation on small rolls") {
    Rng rng = make_rng(42);
    PlantOptions opt;
    for (int trial = 0; trial < 8; ++trial) {
        Mat roll_m = random_roll(rng, 32, 64);
        PianoRoll roll = make_roll(32, 64);
        roll.data = roll_m;
        Template tpl = random_template(rng, 0, opt);
        TransformParams tf;
        tf.t = 0;
        tf.F = static_cast<Flip>(uniform_int(rng, 0, 3));
        tf.D = std::vector<double>{0.5, 0.8, 1.0, 1.2, 1.4}[uniform_int(rng, 0, 4)];
        tf.A = std::vector<double>{0.5, 0.8, 1.0, 1.2, 1.4}[uniform_int(rng, 0, 4)];
        Template transformed = apply_transform(tpl, tf);
        RenderResult rr = render(transformed, transformed.height, transformed.width, 0, 0);

        for (Measure measure : {Measure::BACC, Measure::ZNCC, Measure::RMSE}) {
            ResponseMap map = response_map(roll, tpl, tf, measure);
            for (int r = 0; r < map.values.rows(); ++r) {
                for (int c = 0; c < map.values.cols(); ++c) {
                    double direct = 0.0;
                    switch (measure) {
                    case Measure::BACC:
                        direct = bacc(roll.data, rr.image,
                                      static_cast<int>(transformed.bases.size()), r, c);
                        break;
                    case Measure::ZNCC:
                        direct = zncc(roll.data, rr.image, r, c);
                        break;
                    case Measure::RMSE:
                        direct = rmse(roll.data, rr.image, r, c);
                        break;
                    }
                    CHECK(map.values.at(r, c) ==
                          doctest::Approx(direct).epsilon(1e-4).scale(1.0));
                }
            }
        }
    }
}

TEST_CASE("diffused map equals direct evaluation against the blurred roll") {
    Rng rng = make_rng(9);
    PlantOptions opt;
    Mat roll_m = random_roll(rng, 24, 48);
    PianoRoll roll = make_roll(24, 48);
    roll.data = roll_m;
    Template tpl = random_template(rng, 0, opt);
    DiffuseConfig diffuse{5, 2.0};
    Mat blurred = gaussian_blur(roll_m, diffuse);
    RenderResult rr = render(tpl, tpl.height, tpl.width, 0, 0);

    ResponseMap map = response_map(roll, tpl, TransformParams{0}, Measure::BACC, diffuse);
    for (int r = 0; r < map.values.rows(); ++r)
        for (int c = 0; c < map.values.cols(); ++c) {
            double direct = bacc(blurred, rr.image, static_cast<int>(tpl.bases.size()),
                                 r, c, &roll_m);
            CHECK(map.values.at(r, c) == doctest::Approx(direct).epsilon(1e-4).scale(1.0));
        }
}

TEST_CASE("translation equivariance away from boundaries") {
    Rng rng = make_rng(13);
    PlantOptions opt;
    Template tpl = random_template(rng, 0, opt);
    PianoRoll a = make_roll(32, 48);
    paint_max(tpl, a.data, 5, 6);
    a.data.at(20, 30) = 0.7f;
    PianoRoll b = make_roll(32, 48);
    paint_max(tpl, b.data, 5 + 2, 6 + 3);
    b.data.at(22, 33) = 0.7f;

    for (Measure measure : {Measure::BACC, Measure::ZNCC, Measure::RMSE}) {
        ResponseMap ma = response_map(a, tpl, TransformParams{0}, measure);
        ResponseMap mb = response_map(b, tpl, TransformParams{0}, measure);
        for (int r = 0; r + 2 < ma.values.rows(); ++r)
            for (int c = 0; c + 3 < ma.values.cols(); ++c)
                CHECK(ma.values.at(r, c) ==
                      doctest::Approx(mb.values.at(r + 2, c + 3)).epsilon(1e-5));
    }
}

TEST_CASE("measure ranges hold on random data") {
    Rng rng = make_rng(21);
    PlantOptions opt;
    Mat roll_m = random_roll(rng, 24, 40, 0.15);
    PianoRoll roll = make_roll(24, 40);
    roll.data = roll_m;
    Template tpl = random_template(rng, 0, opt);
    ResponseMap z = response_map(roll, tpl, TransformParams{0}, Measure::ZNCC);
    ResponseMap r = response_map(roll, tpl, TransformParams{0}, Measure::RMSE);
    ResponseMap b = response_map(roll, tpl, TransformParams{0}, Measure::BACC);
    for (size_t i = 0; i < z.values.size(); ++i) {
        CHECK(z.values.data()[i] >= -1.0 - 1e-6);
        CHECK(z.values.data()[i] <= 1.0 + 1e-6);
        CHECK(r.values.data()[i] >= 0.0);
        CHECK(b.values.data()[i] >= 0.0);
    }
}
