#include <doctest.h>

#include "motifcode/error.hpp"
#include "motifcode/learner.hpp"
#include "test_support.hpp"

using namespace motif;
using namespace testutil;

namespace {

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.encoder.flips = {Flip::None, Flip::Horizontal};
    cfg.encoder.duration_scales = {1.0};
    cfg.encoder.spacing_scales = {1.0};
    cfg.stat.q_samples = 2000;
    return cfg;
}

ReferenceModel quick_reference(const std::vector<PianoRoll>& rolls, uint64_t seed) {
    Rng rng = make_rng(seed);
    StatConfig cfg;
    cfg.q_samples = 2000;
    std::vector<PianoRoll> background = shuffled_background(rolls, rng);
    return estimate_reference(background, cfg, rng);
}

} // namespace

TEST_CASE("init_random_crop finds two-note windows") {
    PianoRoll roll = make_roll(64, 128);
    // four disjoint two-note clusters
    add_note(roll, 10, 10, 3);
    add_note(roll, 12, 13, 2);
    add_note(roll, 30, 40, 2);
    add_note(roll, 32, 44, 3);
    add_note(roll, 50, 80, 2);
    add_note(roll, 53, 83, 2);
    add_note(roll, 20, 110, 3);
    add_note(roll, 24, 112, 2);

    TrainConfig cfg = small_config();
    Rng rng = make_rng(12);
    Dictionary dict = init_random_crop({roll}, cfg, rng);
    REQUIRE(dict.size() == 4);
    for (const Template& tpl : dict.templates) {
        CHECK(tpl.bases.size() >= 2);
        validate_template(tpl);
    }
}

TEST_CASE("init_random_crop fails on an all-zero corpus") {
    TrainConfig cfg = small_config();
    Rng rng = make_rng(1);
    std::vector<PianoRoll> corpus{make_roll(32, 64)};
    CHECK_THROWS_AS(init_random_crop(corpus, cfg, rng), InputError);
}

TEST_CASE("init_random_crop is deterministic under a fixed seed") {
    Rng rng_corpus = make_rng(55);
    PlantedCorpus corpus = plant_corpus(rng_corpus, PlantOptions{});
    TrainConfig cfg = small_config();
    Rng a = make_rng(99), b = make_rng(99);
    Dictionary da = init_random_crop(corpus.rolls, cfg, a);
    Dictionary db = init_random_crop(corpus.rolls, cfg, b);
    CHECK(dictionary_to_json(da) == dictionary_to_json(db));
}

TEST_CASE("extract_patches: identity placement cuts the raw window") {
    Rng rng = make_rng(3);
    Template tpl = random_template(rng, 0, PlantOptions{});
    PianoRoll roll = make_roll(48, 64);
    paint_max(tpl, roll.data, 11, 17);

    Placement pl;
    pl.transform.t = 0;
    pl.transform.P = 11;
    pl.transform.X = 17;
    pl.deltas = BasisDeltas(tpl.bases.size());
    SparseCode code;
    code.batch = 0;
    code.placements = {pl};
    code.residual = Mat(48, 64);

    Dictionary dict = as_dictionary({tpl});
    auto groups = extract_patches({code}, {roll}, dict);
    REQUIRE(groups.size() == 1);
    REQUIRE(groups[0].size() == 1);
    RenderResult rr = render(tpl, tpl.height, tpl.width, 0, 0);
    CHECK(groups[0][0] == rr.image);
}

TEST_CASE("extract_patches inverts a horizontal flip") {
    Rng rng = make_rng(4);
    Template tpl = random_template(rng, 0, PlantOptions{});
    TransformParams tf;
    tf.t = 0;
    tf.F = Flip::Horizontal;
    Template flipped = apply_transform(tpl, tf);

    PianoRoll roll = make_roll(48, 64);
    paint_max(flipped, roll.data, 9, 21);

    Placement pl;
    pl.transform = tf;
    pl.transform.P = 9;
    pl.transform.X = 21;
    pl.deltas = BasisDeltas(tpl.bases.size());
    SparseCode code;
    code.batch = 0;
    code.placements = {pl};
    code.residual = Mat(48, 64);

    auto groups = extract_patches({code}, {roll}, as_dictionary({tpl}));
    REQUIRE(groups[0].size() == 1);
    RenderResult rr = render(tpl, tpl.height, tpl.width, 0, 0);
    // positive cells must match the canonical render exactly
    REQUIRE(groups[0][0].rows() == rr.image.rows());
    REQUIRE(groups[0][0].cols() == rr.image.cols());
    for (int r = 0; r < rr.image.rows(); ++r)
        for (int c = 0; c < rr.image.cols(); ++c)
            CHECK((groups[0][0].at(r, c) > 0.0f) == (rr.image.at(r, c) > 0.0f));
}

TEST_CASE("extract_patches leaves unused templates with empty groups") {
    Template tpl = unit_template();
    Dictionary dict = as_dictionary({tpl, tpl});
    SparseCode code;
    code.batch = 0;
    code.residual = Mat(16, 16);
    auto groups = extract_patches({code}, {make_roll(16, 16)}, dict);
    CHECK(groups.size() == 2);
    CHECK(groups[0].empty());
    CHECK(groups[1].empty());
}

TEST_CASE("relearn_template is a fixed point on clean copies") {
    Rng rng = make_rng(5);
    Template tpl = random_template(rng, 0, PlantOptions{});
    RenderResult rr = render(tpl, tpl.height, tpl.width, 0, 0);
    std::vector<Mat> patches(10, rr.image);

    PianoRoll roll = make_roll(48, 64);
    paint_max(tpl, roll.data, 4, 4);
    ReferenceModel ref = quick_reference({roll}, 7);

    TrainConfig cfg = small_config();
    TemplateInfo info;
    Template out = relearn_template(patches, tpl, ref, cfg, info);
    REQUIRE(out.bases.size() == tpl.bases.size());
    auto by_position = [](const Basis& a, const Basis& b) {
        return std::tie(a.x, a.p, a.d) < std::tie(b.x, b.p, b.d);
    };
    std::vector<Basis> expect = tpl.bases;
    std::sort(expect.begin(), expect.end(), by_position);
    for (size_t i = 0; i < out.bases.size(); ++i) {
        CHECK(out.bases[i].x == expect[i].x);
        CHECK(out.bases[i].p == expect[i].p);
        CHECK(out.bases[i].d == expect[i].d);
        CHECK(out.bases[i].weight ==
              doctest::Approx(expect[i].weight).epsilon(0.05));
    }
    CHECK(info.lambda.size() == out.bases.size());
    CHECK(!info.stale);
}

TEST_CASE("a note present in one of ten patches is not added") {
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, 2, 1.0}, Basis{4, 2, 2, 1.0}, Basis{8, 4, 2, 1.0}};
    tighten(tpl);
    RenderResult rr = render(tpl, 10, 14, 0, 0);
    std::vector<Mat> patches(10, rr.image);
    patches[0].at(9, 13) = 1.0f;  // >= 3 cells from every basis

    PianoRoll roll = make_roll(48, 64);
    paint_max(tpl, roll.data, 4, 4);
    ReferenceModel ref = quick_reference({roll}, 8);

    TrainConfig cfg = small_config();  // gamma = 1
    Template old = tpl;
    old.height = 10;
    old.width = 14;
    TemplateInfo info;
    Template out = relearn_template(patches, old, ref, cfg, info);
    CHECK(out.bases.size() == tpl.bases.size());
}

TEST_CASE("a consistently shifted basis is relearned at the new position") {
    Template tpl;
    tpl.id = 0;
    tpl.bases = {Basis{0, 0, 2, 1.0}, Basis{5, 3, 2, 1.0}};
    tighten(tpl);
    Template shifted = tpl;
    shifted.bases[1].x += 1;
    tighten(shifted);
    RenderResult rr = render(shifted, tpl.height, tpl.width + 1, 0, 0);
    std::vector<Mat> patches(8, rr.image);

    PianoRoll roll = make_roll(48, 64);
    paint_max(tpl, roll.data, 4, 4);
    ReferenceModel ref = quick_reference({roll}, 9);

    TrainConfig cfg = small_config();
    TemplateInfo info;
    Template out = relearn_template(patches, tpl, ref, cfg, info);
    REQUIRE(out.bases.size() == 2);
    CHECK(out.bases[1].x == 6);
}

TEST_CASE("relearn keeps the old template when no patches exist") {
    Template tpl = unit_template();
    PianoRoll roll = make_roll(32, 32);
    paint_max(tpl, roll.data, 4, 4);
    ReferenceModel ref = quick_reference({roll}, 10);
    TrainConfig cfg = small_config();
    TemplateInfo info;
    Template out = relearn_template({}, tpl, ref, cfg, info);
    CHECK(out == tpl);
    CHECK(info.stale);
}

TEST_CASE("grow_dictionary drops stale templates and harvests residual") {
    Template used = unit_template();
    Template stale = unit_template();
    Dictionary dict = as_dictionary({used, stale});
    dict.usage = {3, 0};
    dict.info[1].unused_epochs = 2;

    SparseCode code;
    code.batch = 0;
    code.residual = Mat(32, 48);
    // planted three-note residual cluster
    code.residual.at(10, 10) = 1.0f;
    code.residual.at(10, 11) = 1.0f;
    code.residual.at(12, 12) = 1.0f;
    code.residual.at(12, 13) = 1.0f;
    code.residual.at(14, 10) = 1.0f;

    TrainConfig cfg = small_config();
    Rng rng = make_rng(20);
    Dictionary grown =
        grow_dictionary(dict, {code}, {make_roll(32, 48)}, cfg, rng, 1);
    REQUIRE(grown.size() == 2);  // one dropped, one harvested
    CHECK(grown.templates[0].id == 0);
    CHECK(grown.templates[1].id == 1);
    CHECK(grown.templates[1].bases.size() >= 2);
    CHECK(grown.info[1].created_epoch == 1);
}

TEST_CASE("grow_dictionary leaves a clean dictionary unchanged") {
    Template tpl = unit_template();
    Dictionary dict = as_dictionary({tpl});
    dict.usage = {5};
    SparseCode code;
    code.batch = 0;
    code.residual = Mat(16, 16);
    TrainConfig cfg = small_config();
    Rng rng = make_rng(21);
    Dictionary out = grow_dictionary(dict, {code}, {make_roll(16, 16)}, cfg, rng, 2);
    CHECK(out.size() == 1);
    CHECK(out.templates[0] == tpl);
}

TEST_CASE("train recovers a small planted corpus") {
    Rng rng = make_rng(100);
    PlantOptions opt;
    opt.n_templates = 2;
    opt.instances_each = 6;
    opt.n_batches = 1;
    opt.rows = 64;
    opt.cols = 160;
    PlantedCorpus corpus = plant_corpus(rng, opt);

    TrainConfig cfg = small_config();
    cfg.epochs = 4;
    cfg.seed = 7;
    TrainResult result = train(corpus.rolls, cfg);
    REQUIRE(result.codes.size() == 1);
    CHECK(result.report.epochs.size() == 4);
    CHECK(result.report.epochs.back().rmse < 0.05);
    // usage counts match a recount over the final codes
    std::vector<int> recount(result.dictionary.size(), 0);
    for (const SparseCode& code : result.codes)
        for (const Placement& pl : code.placements) ++recount[pl.transform.t];
    CHECK(recount == result.dictionary.usage);
}

TEST_CASE("train with zero epochs returns the initial dictionary") {
    Rng rng = make_rng(101);
    PlantedCorpus corpus = plant_corpus(rng, PlantOptions{});
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    cfg.seed = 3;
    TrainResult result = train(corpus.rolls, cfg);
    CHECK(result.codes.empty());
    CHECK(result.report.epochs.empty());
    Rng check = make_rng(3);
    Dictionary expect = init_random_crop(corpus.rolls, cfg, check);
    CHECK(dictionary_to_json(result.dictionary) == dictionary_to_json(expect));
}

TEST_CASE("train is deterministic given the seed") {
    Rng rng = make_rng(102);
    PlantOptions opt;
    opt.n_templates = 2;
    opt.instances_each = 4;
    opt.n_batches = 1;
    opt.rows = 48;
    opt.cols = 96;
    PlantedCorpus corpus = plant_corpus(rng, opt);
    TrainConfig cfg = small_config();
    cfg.epochs = 2;
    cfg.seed = 11;
    TrainResult a = train(corpus.rolls, cfg);
    TrainResult b = train(corpus.rolls, cfg);
    CHECK(dictionary_to_json(a.dictionary) == dictionary_to_json(b.dictionary));
    REQUIRE(a.codes.size() == b.codes.size());
    for (size_t i = 0; i < a.codes.size(); ++i)
        CHECK(code_to_json(a.codes[i]) == code_to_json(b.codes[i]));
    // report rows identical apart from wall-clock seconds
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (size_t i = 0; i < a.report.epochs.size(); ++i) {
        CHECK(a.report.epochs[i].rmse == b.report.epochs[i].rmse);
        CHECK(a.report.epochs[i].objective == b.report.epochs[i].objective);
        CHECK(a.report.epochs[i].basis_total == b.report.epochs[i].basis_total);
    }
}

TEST_CASE("dictionary JSON round-trip") {
    Rng rng = make_rng(103);
    PlantedCorpus corpus = plant_corpus(rng, PlantOptions{});
    Dictionary dict = as_dictionary(corpus.templates);
    dict.usage = {4, 2, 0};
    dict.info[0].lambda = {1.5, 2.0, 0.5};
    dict.info[0].log_likelihood = 12.25;
    dict.info[2].unused_epochs = 1;
    Dictionary back = dictionary_from_json(dictionary_to_json(dict));
    CHECK(dictionary_to_json(back) == dictionary_to_json(dict));
    CHECK(back.templates == dict.templates);
    CHECK(back.usage == dict.usage);
}

TEST_CASE("report CSV has the documented columns") {
    TrainReport report;
    EpochStats e;
    e.epoch = 1;
    e.rmse = 0.125;
    e.dict_size = 4;
    e.basis_total = 13;
    e.code_params = 210;
    e.objective = 17.125;
    e.seconds = 0.5;
    report.epochs.push_back(e);
    std::string csv = report_to_csv(report);
    CHECK(csv.find("epoch,rmse,dict_size,basis_total,code_params,objective,seconds") !=
          std::string::npos);
    CHECK(csv.find("1,0.125,4,13,210,17.125") != std::string::npos);
}
