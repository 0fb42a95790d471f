#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "dscx/dataset.hpp"
#include "test_util.hpp"

using namespace dscx;

TEST(SelectKeyframes, EvenSpacingOver120Frames) {
    const std::vector<int> want{0, 11, 22, 32, 43, 54, 65, 76, 87, 97, 108, 119};
    EXPECT_EQ(select_keyframes(120), want);
}

TEST(SelectKeyframes, TwelveFramesSelectAll) {
    const std::vector<int> want{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    EXPECT_EQ(select_keyframes(12), want);
}

TEST(SelectKeyframes, EndpointsAndMonotonicity) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 12 + rng.below_int(500);
        const auto idx = select_keyframes(n);
        ASSERT_EQ(idx.size(), 12u);
        EXPECT_EQ(idx.front(), 0);
        EXPECT_EQ(idx.back(), n - 1);
        for (size_t i = 1; i < idx.size(); ++i) ASSERT_GT(idx[i], idx[i - 1]);
        EXPECT_LT(idx.back(), n);
    }
}

TEST(SelectKeyframes, TooFewFramesThrows) {
    EXPECT_THROW(select_keyframes(11), TooFewFrames);
    EXPECT_THROW(select_keyframes(0), TooFewFrames);
}

TEST(Manifest, RoundTrip) {
    testutil::TempDir dir("manifest");
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < 4; ++i) {
        ManifestEntry e;
        e.sample_id = "s" + std::to_string(i);
        e.detections_path = "d" + std::to_string(i) + ".jsonl";
        e.dynamics_path = "y" + std::to_string(i) + ".csv";
        e.label = i % 5;
        e.moving = i % 2 == 0;
        e.video_id = "vid_0";
        e.segment = i;
        entries.push_back(e);
    }
    write_manifest(dir / "m.csv", entries);
    const Manifest m = read_manifest(dir / "m.csv");
    ASSERT_EQ(m.entries.size(), 4u);
    for (size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(m.entries[i].sample_id, entries[i].sample_id);
        EXPECT_EQ(m.entries[i].label, entries[i].label);
        EXPECT_EQ(m.entries[i].moving, entries[i].moving);
        EXPECT_EQ(m.entries[i].segment, entries[i].segment);
    }
}

TEST(Manifest, RejectsDuplicatesAndBadLabels) {
    testutil::TempDir dir("manifest_bad");
    testutil::spit(dir / "dup.csv",
                   "sample_id,detections_path,dynamics_path,label,moving,video_id,segment\n"
                   "a,d.jsonl,y.csv,1,1,v,0\n"
                   "a,d.jsonl,y.csv,2,1,v,1\n");
    EXPECT_THROW(read_manifest(dir / "dup.csv"), ParseError);
    testutil::spit(dir / "label.csv",
                   "sample_id,detections_path,dynamics_path,label,moving,video_id,segment\n"
                   "a,d.jsonl,y.csv,7,1,v,0\n");
    EXPECT_THROW(read_manifest(dir / "label.csv"), ParseError);
    EXPECT_THROW(read_manifest(dir / "missing.csv"), IoError);
}

TEST(StratifiedSplit, ReproducesPublishedCounts) {
    // class totals from the published split table
    const std::vector<int> totals{2581, 3523, 1461, 254, 41};
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c) labels.insert(labels.end(), totals[c], c);
    std::ostringstream log;
    const auto split = stratified_split_indices(
        static_cast<int>(labels.size()), [&](int i) { return labels[i]; }, 0.8, 99, &log);
    std::vector<int> train_counts(5, 0), val_counts(5, 0);
    for (int i : split.train) ++train_counts[labels[i]];
    for (int i : split.validate) ++val_counts[labels[i]];
    EXPECT_EQ(train_counts, (std::vector<int>{2055, 2819, 1179, 202, 33}));
    EXPECT_EQ(val_counts, (std::vector<int>{526, 704, 282, 52, 8}));
}

TEST(StratifiedSplit, DisjointCoveringAndSeedStable) {
    std::vector<int> labels;
    Rng rng(5);
    for (int i = 0; i < 300; ++i) labels.push_back(rng.below_int(5));
    auto label_of = [&](int i) { return labels[i]; };
    const auto a = stratified_split_indices(300, label_of, 0.8, 17);
    const auto b = stratified_split_indices(300, label_of, 0.8, 17);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.validate, b.validate);
    std::set<int> all(a.train.begin(), a.train.end());
    for (int i : a.validate) EXPECT_TRUE(all.insert(i).second) << "overlap at " << i;
    EXPECT_EQ(all.size(), 300u);
    const auto c = stratified_split_indices(300, label_of, 0.8, 18);
    EXPECT_NE(a.train, c.train);
}

TEST(Kfold, EverySampleValidatesExactlyOnce) {
    std::vector<int> labels;
    Rng rng(7);
    for (int i = 0; i < 217; ++i) labels.push_back(rng.below_int(5));
    const auto folds = kfold_indices(217, [&](int i) { return labels[i]; }, 5, 3);
    ASSERT_EQ(folds.size(), 5u);
    std::vector<int> seen(217, 0);
    for (const auto& f : folds) {
        for (int i : f.validate) ++seen[i];
        std::set<int> train_set(f.train.begin(), f.train.end());
        for (int i : f.validate) EXPECT_FALSE(train_set.count(i));
        EXPECT_EQ(f.train.size() + f.validate.size(), 217u);
    }
    for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Kfold, FoldClassProportionsWithinOneSample) {
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 40 + 13 * c; ++i) labels.push_back(c);
    const int n = static_cast<int>(labels.size());
    const auto folds = kfold_indices(n, [&](int i) { return labels[i]; }, 5, 11);
    for (const auto& f : folds) {
        std::vector<int> counts(5, 0);
        for (int i : f.validate) ++counts[labels[i]];
        for (int c = 0; c < 5; ++c) {
            const double expected = (40 + 13 * c) / 5.0;
            EXPECT_LE(std::abs(counts[c] - expected), 1.0) << "class " << c;
        }
    }
}

TEST(Kfold, RejectsDegenerateK) {
    std::vector<int> labels(20, 0);
    EXPECT_THROW(kfold_indices(20, [&](int i) { return labels[i]; }, 1, 0), InvalidConfig);
}

TEST(DynamicsCsv, ParsesAndResamples) {
    testutil::TempDir dir("dyncsv");
    testutil::spit(dir / "d.csv",
                   "t,ax,ay,yaw_rate,speed\n"
                   "0.0,1.0,0.0,0.0,10.0\n"
                   "4.0,5.0,0.0,0.0,10.0\n");
    const DynamicsWindow w = read_dynamics_csv(dir / "d.csv", 5, 4.0);
    ASSERT_EQ(w.length(), 5);
    // grid 0.0, 0.8, 1.6, 2.4, 3.2 on the segment from (0,1) to (4,5)
    EXPECT_NEAR(w.ax[0], 1.0, 1e-12);
    EXPECT_NEAR(w.ax[1], 1.8, 1e-12);
    EXPECT_NEAR(w.ax[4], 4.2, 1e-12);
    EXPECT_NEAR(w.speed[2], 10.0, 1e-12);
}

TEST(DynamicsCsv, DropsNonFiniteRowsAndClampsEnds) {
    testutil::TempDir dir("dyncsv2");
    testutil::spit(dir / "d.csv",
                   "t,ax,ay,yaw_rate,speed\n"
                   "1.0,2.0,0.5,0.1,12.0\n"
                   "2.0,nan,0.5,0.1,12.0\n"
                   "3.0,4.0,0.5,0.1,12.0\n");
    const DynamicsWindow w = read_dynamics_csv(dir / "d.csv", 8, 4.0);
    for (double v : w.ax) EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(w.ax[0], 2.0, 1e-12);  // clamped before t=1
    EXPECT_NEAR(w.ax[7], 4.0, 1e-12);  // clamped after t=3
}

TEST(DynamicsCsv, RejectsBadHeaderOrEmpty) {
    testutil::TempDir dir("dyncsv3");
    testutil::spit(dir / "bad.csv", "time,ax,ay,yaw,speed\n0,0,0,0,0\n");
    EXPECT_THROW(read_dynamics_csv(dir / "bad.csv"), ParseError);
    testutil::spit(dir / "empty.csv", "t,ax,ay,yaw_rate,speed\n");
    EXPECT_THROW(read_dynamics_csv(dir / "empty.csv"), ParseError);
}

TEST(DetectionsJsonl, RoundTripAndFrameOrder) {
    testutil::TempDir dir("jsonl");
    std::vector<FrameDetections> frames(3);
    frames[0].frame = 2;
    frames[1].frame = 0;
    frames[2].frame = 1;
    Detection d;
    d.x_lb = 1.5;
    d.y_lb = 2.25;
    d.x_rt = 10.125;
    d.y_rt = 20.5;
    d.cls = ObjectClass::TrafficLight;
    frames[1].boxes.push_back(d);
    write_detections_jsonl(dir / "f.jsonl", frames);
    const auto got = read_detections_jsonl(dir / "f.jsonl");
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].frame, 0); // sorted by frame index
    ASSERT_EQ(got[0].boxes.size(), 1u);
    EXPECT_EQ(got[0].boxes[0].x_lb, 1.5);
    EXPECT_EQ(got[0].boxes[0].y_rt, 20.5);
    EXPECT_EQ(got[0].boxes[0].cls, ObjectClass::TrafficLight);
}

TEST(DetectionsJsonl, ParseErrorsCarryLineNumbers) {
    testutil::TempDir dir("jsonl_bad");
    testutil::spit(dir / "bad.jsonl", "{\"frame\": 0, \"boxes\": []}\nnot json\n");
    try {
        read_detections_jsonl(dir / "bad.jsonl");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
    testutil::spit(dir / "cls.jsonl",
                   R"({"frame":0,"boxes":[{"x_lb":0,"y_lb":0,"x_rt":1,"y_rt":1,"class":"dragon"}]})"
                   "\n");
    EXPECT_THROW(read_detections_jsonl(dir / "cls.jsonl"), ParseError);
}

TEST(LoadDataset, DropsBrokenEntriesWithLog) {
    testutil::TempDir dir("load");
    // one good sample, one with a missing dynamics file
    std::vector<FrameDetections> frames(12);
    for (int i = 0; i < 12; ++i) frames[static_cast<size_t>(i)].frame = i;
    write_detections_jsonl(dir / "good.jsonl", frames);
    write_detections_jsonl(dir / "also_good.jsonl", frames);
    std::string csv = "t,ax,ay,yaw_rate,speed\n0.0,0,0,0,10\n4.0,0,0,0,10\n";
    testutil::spit(dir / "good.csv", csv);
    std::vector<ManifestEntry> entries(2);
    entries[0] = {"ok", "good.jsonl", "good.csv", 1, true, "v", 0};
    entries[1] = {"broken", "also_good.jsonl", "missing.csv", 2, true, "v", 1};
    write_manifest(dir / "m.csv", entries);
    std::ostringstream log;
    const LoadedDataset ds = load_dataset(read_manifest(dir / "m.csv"), 120, 4.0, &log);
    EXPECT_EQ(ds.samples.size(), 1u);
    EXPECT_EQ(ds.dropped, 1);
    EXPECT_NE(log.str().find("broken"), std::string::npos);
    EXPECT_EQ(ds.samples[0].keyframes.size(), 12u);
    EXPECT_EQ(ds.samples[0].dynamics.length(), 120);
}
