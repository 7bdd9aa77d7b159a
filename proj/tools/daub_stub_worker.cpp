// Minimal trainer worker for exercising the line protocol without a real
// training stack. Each learner's validation accuracy is n / (n + K), where K
// is read from a name of the form "k<K>" (100 otherwise). Fault switches make
// the worker crash, report errors, emit garbage or hang above a given n.
//
//   daub_stub_worker [--learners echo,k50] [--noise 0.02] [--version 1]
//                    [--crash-above N] [--fail-above N] [--malformed-above N]
//                    [--hang-above N] [--mismatch-above N] [--log FILE]
#include <algorithm>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "daub/learners.hpp"
#include "daub/worker_protocol.hpp"

namespace {

using namespace daub;
namespace proto = daub::protocol;

double curve_k(const std::string& name) {
    if (name.size() > 1 && name[0] == 'k') {
        try {
            return std::stod(name.substr(1));
        } catch (const std::exception&) {
        }
    }
    return 100.0;
}

void send(const proto::Message& m) { std::cout << proto::encode(m) << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stub trainer worker"};
    std::string learners = "echo";
    double noise = 0.0;
    int version = proto::kVersion;
    std::int64_t crash_above = -1, fail_above = -1, malformed_above = -1, hang_above = -1, mismatch_above = -1;
    std::string log_path;
    app.add_option("--learners", learners);
    app.add_option("--noise", noise);
    app.add_option("--version", version);
    app.add_option("--crash-above", crash_above);
    app.add_option("--fail-above", fail_above);
    app.add_option("--malformed-above", malformed_above);
    app.add_option("--hang-above", hang_above);
    app.add_option("--mismatch-above", mismatch_above);
    app.add_option("--log", log_path);
    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> names;
    {
        std::stringstream ss(learners);
        std::string t;
        while (std::getline(ss, t, ','))
            if (!t.empty()) names.push_back(t);
    }
    std::ofstream log;
    if (!log_path.empty()) log.open(log_path, std::ios::app);

    auto above = [](std::int64_t limit, std::int64_t n) { return limit >= 0 && n > limit; };

    std::string line;
    while (std::getline(std::cin, line)) {
        if (log.is_open()) log << line << '\n' << std::flush;
        proto::Message msg;
        try {
            msg = proto::decode(line);
        } catch (const std::exception& e) {
            send(proto::Error{"bad_request", e.what()});
            continue;
        }
        if (std::holds_alternative<proto::Hello>(msg)) {
            send(proto::HelloReply{version, names});
        } else if (std::holds_alternative<proto::Shutdown>(msg)) {
            return 0;
        } else if (auto* t = std::get_if<proto::TrainEval>(&msg)) {
            if (std::find(names.begin(), names.end(), t->learner) == names.end()) {
                send(proto::Error{"bad_request", "unknown learner " + t->learner});
                continue;
            }
            if (above(crash_above, t->n)) return 3;
            if (above(hang_above, t->n)) {
                for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
            }
            if (above(malformed_above, t->n)) {
                std::cout << "{\"op\": \"result\", \"learner\": " << std::endl;
                continue;
            }
            if (above(fail_above, t->n)) {
                send(proto::Error{"train_failed", "refusing n=" + std::to_string(t->n)});
                continue;
            }
            const double dn = static_cast<double>(t->n);
            double val = dn / (dn + curve_k(t->learner));
            // Deterministic in the seed: the same request gives the same answer.
            const double u = static_cast<double>(mix_seed(t->seed) >> 11) * 0x1.0p-53;
            val = clamp01(val + noise * (u - 0.5));
            proto::Result r{t->learner, t->n, std::min(1.0, val + 0.05), val, dn * 1e-3};
            if (above(mismatch_above, t->n)) r.n = t->n + 1;
            send(r);
        }
    }
    return 0;
}
