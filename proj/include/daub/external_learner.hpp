// external_learner.hpp
//
// Client side of the trainer-worker protocol: spawns a worker process,
// performs the hello handshake, and exposes each learner the worker serves
// as a Learner. POSIX only.
#pragma once
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "learners.hpp"
#include "worker_protocol.hpp"

namespace daub {

class WorkerProcess {
public:
    using Clock = std::chrono::steady_clock;

    // Starts `argv` and completes the handshake. Throws LearnerFailure when
    // the process cannot start or exits, ProtocolError on a bad or
    // mismatched hello.
    static std::shared_ptr<WorkerProcess> spawn(const std::vector<std::string>& argv,
                                                std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
        std::shared_ptr<WorkerProcess> w(new WorkerProcess());
        w->start(argv);
        auto reply = w->request(protocol::Hello{}, timeout);
        if (auto* h = std::get_if<protocol::HelloReply>(&reply)) {
            if (h->version != protocol::kVersion) {
                w->terminate("version mismatch");
                throw ProtocolError("worker speaks protocol version " + std::to_string(h->version) +
                                    ", expected " + std::to_string(protocol::kVersion));
            }
            w->learners_ = h->learners;
            return w;
        }
        w->terminate("bad handshake");
        throw ProtocolError("worker did not answer hello with a hello reply");
    }

    WorkerProcess(const WorkerProcess&) = delete;
    WorkerProcess& operator=(const WorkerProcess&) = delete;

    ~WorkerProcess() {
        if (pid_ > 0) terminate("destroyed");
        close_fds();
    }

    const std::vector<std::string>& learners() const { return learners_; }
    bool alive() const { return pid_ > 0; }
    pid_t pid() const { return pid_; }

    // One request, one reply. Serialized per process.
    protocol::Message request(const protocol::Message& msg, std::chrono::milliseconds timeout) {
        std::lock_guard lock(mu_);
        if (pid_ <= 0) throw LearnerFailure("worker is not running: " + dead_reason_);
        write_line(protocol::encode(msg));
        auto line = read_line(Clock::now() + timeout);
        return protocol::decode(line);
    }

    // Sends shutdown and waits for exit. Returns the exit status (or -1 when
    // the worker had to be killed).
    int shutdown(std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
        std::lock_guard lock(mu_);
        if (pid_ <= 0) return exit_status_;
        try {
            write_line(protocol::encode(protocol::Shutdown{}));
        } catch (const LearnerFailure&) {
        }
        const auto deadline = Clock::now() + timeout;
        while (Clock::now() < deadline) {
            int status = 0;
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                pid_ = -1;
                exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
                dead_reason_ = "shut down";
                close_fds();
                return exit_status_;
            }
            ::usleep(1000);
        }
        terminate("did not exit after shutdown");
        return -1;
    }

private:
    WorkerProcess() = default;

    void start(const std::vector<std::string>& argv) {
        if (argv.empty()) throw ConfigError("worker command is empty");
        std::signal(SIGPIPE, SIG_IGN);
        int in_pipe[2], out_pipe[2];
        if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw LearnerFailure(std::string("pipe: ") + std::strerror(errno));
        if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
            throw LearnerFailure(std::string("pipe: ") + std::strerror(errno));
        }
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        pid_t pid = ::fork();
        if (pid < 0) throw LearnerFailure(std::string("fork: ") + std::strerror(errno));
        if (pid == 0) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        pid_ = pid;
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
    }

    void write_line(const std::string& line) {
        std::string data = line + "\n";
        const char* p = data.data();
        std::size_t left = data.size();
        while (left > 0) {
            ssize_t w = ::write(to_child_, p, left);
            if (w < 0) {
                if (errno == EINTR) continue;
                const std::string why = std::strerror(errno);
                reap_after_eof();
                throw LearnerFailure("write to worker failed (" + why + "): " + dead_reason_);
            }
            p += w;
            left -= static_cast<std::size_t>(w);
        }
    }

    std::string read_line(Clock::time_point deadline) {
        for (;;) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                return line;
            }
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (remaining.count() <= 0) {
                terminate("timed out");
                throw LearnerFailure("worker timed out");
            }
            pollfd pfd{from_child_, POLLIN, 0};
            int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
            if (pr < 0) {
                if (errno == EINTR) continue;
                terminate("poll failed");
                throw LearnerFailure("poll on worker failed");
            }
            if (pr == 0) continue;  // deadline check at loop top
            char chunk[4096];
            ssize_t got = ::read(from_child_, chunk, sizeof chunk);
            if (got < 0) {
                if (errno == EINTR) continue;
                terminate("read failed");
                throw LearnerFailure("read from worker failed");
            }
            if (got == 0) {
                reap_after_eof();
                throw LearnerFailure("worker exited: " + dead_reason_);
            }
            buffer_.append(chunk, static_cast<std::size_t>(got));
        }
    }

    void reap_after_eof() {
        if (pid_ <= 0) return;
        int status = 0;
        // The pipe closed; give the process a moment to finish exiting.
        for (int i = 0; i < 2000; ++i) {
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                pid_ = -1;
                if (WIFEXITED(status)) {
                    exit_status_ = WEXITSTATUS(status);
                    dead_reason_ = "exit status " + std::to_string(exit_status_);
                } else if (WIFSIGNALED(status)) {
                    exit_status_ = -1;
                    dead_reason_ = "killed by signal " + std::to_string(WTERMSIG(status));
                }
                close_fds();
                return;
            }
            ::usleep(1000);
        }
        terminate("closed its output");
    }

    void terminate(const std::string& reason) {
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
            pid_ = -1;
            exit_status_ = -1;
        }
        dead_reason_ = reason;
        close_fds();
    }

    void close_fds() {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        to_child_ = from_child_ = -1;
    }

    std::mutex mu_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    int exit_status_ = -1;
    std::string buffer_;
    std::string dead_reason_;
    std::vector<std::string> learners_;
};

class ExternalLearner final : public Learner {
public:
    ExternalLearner(std::shared_ptr<WorkerProcess> worker, std::string name,
                    std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : worker_(std::move(worker)), name_(std::move(name)), timeout_(timeout) {}

    const std::string& name() const override { return name_; }

    CurveSample train_eval(SampleCount n, std::uint64_t seed) override {
        auto reply = worker_->request(protocol::TrainEval{name_, n, seed}, timeout_);
        if (auto* err = std::get_if<protocol::Error>(&reply)) {
            if (err->code == "train_failed") throw LearnerFailure("train_failed: " + err->message);
            throw ProtocolError(err->code + ": " + err->message);
        }
        auto* res = std::get_if<protocol::Result>(&reply);
        if (!res) throw ProtocolError("expected a result message");
        if (res->learner != name_ || res->n != n)
            throw ProtocolError("result does not match request (" + res->learner + ", n=" + std::to_string(res->n) + ")");
        CurveSample s{n, res->train_acc, res->val_acc, res->cost_seconds};
        try {
            s.validate();
        } catch (const DomainError& e) {
            throw ProtocolError(std::string("invalid result: ") + e.what());
        }
        return s;
    }

    const std::shared_ptr<WorkerProcess>& worker() const { return worker_; }

private:
    std::shared_ptr<WorkerProcess> worker_;
    std::string name_;
    std::chrono::milliseconds timeout_;
};

// Spawns a worker and returns one learner per requested name (all served
// names when `names` is empty).
inline LearnerPool connect_worker(const std::vector<std::string>& argv, const std::vector<std::string>& names,
                                  std::chrono::milliseconds timeout) {
    auto worker = WorkerProcess::spawn(argv, timeout);
    const auto& served = worker->learners();
    LearnerPool pool;
    for (const auto& name : names.empty() ? served : names) {
        if (std::find(served.begin(), served.end(), name) == served.end())
            throw ConfigError("worker does not serve learner '" + name + "'");
        pool.push_back(std::make_unique<ExternalLearner>(worker, name, timeout));
    }
    return pool;
}

}  // namespace daub
