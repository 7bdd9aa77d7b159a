#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "daub/external_learner.hpp"
#include "daub/scheduler.hpp"
#include "daub/worker_protocol.hpp"

using namespace daub;
namespace proto = daub::protocol;
using namespace std::chrono_literals;

namespace {

std::vector<std::string> stub(std::vector<std::string> extra = {}) {
    std::vector<std::string> argv{DAUB_STUB_WORKER};
    argv.insert(argv.end(), extra.begin(), extra.end());
    return argv;
}

double stub_val(SampleCount n, double k, double noise, std::uint64_t seed) {
    const double u = static_cast<double>(mix_seed(seed) >> 11) * 0x1.0p-53;
    return clamp01(static_cast<double>(n) / (static_cast<double>(n) + k) + noise * (u - 0.5));
}

}  // namespace

TEST(Wire, EncodeDecodeRoundTrip) {
    const std::vector<proto::Message> msgs = {
        proto::Hello{1},
        proto::HelloReply{1, {"a", "b"}},
        proto::TrainEval{"a", 123456789, 0xFFFFFFFFFFFFFFFFULL},
        proto::Result{"a", 42, 0.9, 0.1 + 0.2, 1e-3},
        proto::Shutdown{},
        proto::Error{"train_failed", "boom"},
    };
    for (const auto& m : msgs) {
        const auto line = proto::encode(m);
        EXPECT_EQ(line.find('\n'), std::string::npos);
        EXPECT_EQ(proto::decode(line), m) << line;
    }
}

TEST(Wire, MatchesDocumentedShapes) {
    EXPECT_EQ(proto::encode(proto::Hello{1}), R"({"op":"hello","version":1})");
    auto te = nlohmann::json::parse(proto::encode(proto::TrainEval{"x", 7, 9}));
    EXPECT_EQ(te, nlohmann::json::parse(R"({"op":"train_eval","learner":"x","n":7,"seed":9})"));
    EXPECT_EQ(proto::decode(R"({"op":"shutdown"})"), proto::Message{proto::Shutdown{}});
}

TEST(Wire, UnknownFieldsIgnoredAndBadInputRejected) {
    auto m = proto::decode(R"({"op":"result","learner":"x","n":5,"train_acc":1,"val_acc":0.5,"cost_seconds":0.1,"extra":[1,2]})");
    EXPECT_EQ(std::get<proto::Result>(m).val_acc, 0.5);
    EXPECT_THROW(proto::decode("{not json"), ProtocolError);
    EXPECT_THROW(proto::decode("[1,2]"), ProtocolError);
    EXPECT_THROW(proto::decode(R"({"op":"dance"})"), ProtocolError);
    EXPECT_THROW(proto::decode(R"({"op":"train_eval","learner":"x","n":1.5,"seed":1})"), ProtocolError);
    EXPECT_THROW(proto::decode(R"({"op":"train_eval","learner":"x","n":1,"seed":-1})"), ProtocolError);
    EXPECT_THROW(proto::decode(R"({"op":"result","learner":"x","n":5,"val_acc":"high"})"), ProtocolError);
    EXPECT_THROW(proto::decode(R"({"version":1})"), ProtocolError);
}

TEST(StubWorker, EchoCurve) {
    auto pool = connect_worker(stub(), {}, 5s);
    ASSERT_EQ(pool.size(), 1u);
    EXPECT_EQ(pool[0]->name(), "echo");
    auto s = pool[0]->train_eval(100, 1);
    EXPECT_EQ(s.n, 100);
    EXPECT_EQ(s.val_acc, 0.5);
    EXPECT_DOUBLE_EQ(s.cost, 0.1);
}

TEST(StubWorker, SeedAndSizeSurviveTheRoundTrip) {
    auto pool = connect_worker(stub({"--learners", "echo,k250", "--noise", "0.1"}), {"k250"}, 5s);
    for (std::uint64_t seed : {0ULL, 1ULL, 0x8000000000000000ULL, 0xFFFFFFFFFFFFFFFFULL, 1234567890123456789ULL}) {
        for (SampleCount n : {SampleCount{1}, SampleCount{1000}, SampleCount{4000000000LL}}) {
            auto s = pool[0]->train_eval(n, seed);
            EXPECT_EQ(s.n, n);
            EXPECT_DOUBLE_EQ(s.val_acc, stub_val(n, 250.0, 0.1, seed)) << seed;
        }
    }
}

TEST(StubWorker, UnknownLearnerIsAConfigError) {
    EXPECT_THROW(connect_worker(stub(), {"nope"}, 5s), ConfigError);
}

TEST(StubWorker, CrashSurfacesAsLearnerFailure) {
    auto pool = connect_worker(stub({"--crash-above", "1000"}), {}, 5s);
    EXPECT_NO_THROW(pool[0]->train_eval(1000, 1));
    try {
        pool[0]->train_eval(1001, 1);
        FAIL() << "expected LearnerFailure";
    } catch (const ProtocolError&) {
        FAIL() << "crash is not a protocol error";
    } catch (const LearnerFailure& e) {
        EXPECT_NE(std::string(e.what()).find("exit status 3"), std::string::npos) << e.what();
    }
    // the worker is gone; later calls fail fast
    EXPECT_THROW(pool[0]->train_eval(10, 1), LearnerFailure);
}

TEST(StubWorker, TrainFailedKeepsWorkerAlive) {
    auto pool = connect_worker(stub({"--fail-above", "500"}), {}, 5s);
    EXPECT_THROW(pool[0]->train_eval(600, 1), LearnerFailure);
    EXPECT_NO_THROW(pool[0]->train_eval(400, 1));
}

TEST(StubWorker, MalformedReplyIsProtocolError) {
    auto pool = connect_worker(stub({"--malformed-above", "10"}), {}, 5s);
    EXPECT_THROW(pool[0]->train_eval(11, 1), ProtocolError);
}

TEST(StubWorker, MismatchedReplyIsProtocolError) {
    auto pool = connect_worker(stub({"--mismatch-above", "10"}), {}, 5s);
    EXPECT_THROW(pool[0]->train_eval(11, 1), ProtocolError);
}

TEST(StubWorker, HangTimesOut) {
    auto pool = connect_worker(stub({"--hang-above", "10"}), {}, 300ms);
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_THROW(pool[0]->train_eval(11, 1), LearnerFailure);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 5s);
}

TEST(StubWorker, VersionMismatchAbortsHandshake) {
    EXPECT_THROW(connect_worker(stub({"--version", "2"}), {}, 5s), ProtocolError);
}

TEST(StubWorker, MissingExecutableFailsCleanly) {
    EXPECT_THROW(connect_worker({"/nonexistent/worker-binary"}, {}, 2s), LearnerFailure);
}

TEST(StubWorker, ShutdownExitsZero) {
    auto w = WorkerProcess::spawn(stub(), 5s);
    EXPECT_TRUE(w->alive());
    EXPECT_EQ(w->shutdown(), 0);
    EXPECT_FALSE(w->alive());
}

TEST(StubWorker, SchedulerDeactivatesCrashingLearner) {
    auto dir = std::filesystem::temp_directory_path() / "daub_stub_log";
    std::filesystem::create_directories(dir);
    auto log = dir / "requests.jsonl";
    std::filesystem::remove(log);
    // A crash takes the whole worker down, so give the crashing learner its
    // own process.
    auto a = connect_worker(stub({"--learners", "k50", "--log", log.string()}), {}, 5s);
    auto b = connect_worker(stub({"--learners", "k10", "--crash-above", "1000"}), {}, 5s);
    LearnerPool pool;
    pool.push_back(std::move(a[0]));
    pool.push_back(std::move(b[0]));
    DaubConfig c;
    c.b = 100;
    c.r = 2.0;
    c.N = 6400;
    auto rep = run_daub(pool, c);
    EXPECT_EQ(rep.selected, 0u);
    ASSERT_EQ(rep.failures.size(), 1u);
    EXPECT_EQ(rep.failures[0].learner, 1u);
    EXPECT_EQ(rep.failures[0].n, 1600);

    // every train_eval the scheduler issued for k50 reached the worker
    std::ifstream in(log);
    std::string line;
    std::vector<SampleCount> seen;
    while (std::getline(in, line)) {
        auto m = proto::decode(line);
        if (auto* t = std::get_if<proto::TrainEval>(&m)) {
            EXPECT_EQ(t->seed, allocation_seed(0, 0, t->n));
            seen.push_back(t->n);
        }
    }
    EXPECT_EQ(seen, rep.sequence.induced(0));
}

TEST(StubWorker, BootstrapFailureOfOneOfThree) {
    auto ok1 = connect_worker(stub({"--learners", "k20"}), {}, 5s);
    auto bad = connect_worker(stub({"--learners", "k5", "--fail-above", "0"}), {}, 5s);
    auto ok2 = connect_worker(stub({"--learners", "k40"}), {}, 5s);
    LearnerPool pool;
    pool.push_back(std::move(ok1[0]));
    pool.push_back(std::move(bad[0]));
    pool.push_back(std::move(ok2[0]));
    DaubConfig c;
    c.b = 100;
    c.r = 2.0;
    c.N = 1600;
    auto rep = run_daub(pool, c);
    ASSERT_EQ(rep.failures.size(), 1u);
    EXPECT_EQ(rep.failures[0].n, 100);
    EXPECT_EQ(rep.sequence.induced(0).size() >= 3, true);
    EXPECT_EQ(rep.sequence.induced(2).size() >= 3, true);
    EXPECT_TRUE(rep.sequence.induced(1).empty());
}
