// worker_protocol.hpp
//
// Newline-delimited JSON messages exchanged with trainer workers over their
// stdin/stdout. One message per line; unknown fields are ignored.
#pragma once
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "errors.hpp"

namespace daub::protocol {

inline constexpr int kVersion = 1;

struct Hello {
    int version = kVersion;
    bool operator==(const Hello&) const = default;
};

struct HelloReply {
    int version = kVersion;
    std::vector<std::string> learners;
    bool operator==(const HelloReply&) const = default;
};

struct TrainEval {
    std::string learner;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    bool operator==(const TrainEval&) const = default;
};

struct Result {
    std::string learner;
    std::int64_t n = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double cost_seconds = 0.0;
    bool operator==(const Result&) const = default;
};

struct Shutdown {
    bool operator==(const Shutdown&) const = default;
};

struct Error {
    std::string code;  // "train_failed" | "bad_request"
    std::string message;
    bool operator==(const Error&) const = default;
};

using Message = std::variant<Hello, HelloReply, TrainEval, Result, Shutdown, Error>;

inline nlohmann::json to_json(const Message& m) {
    using nlohmann::json;
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Hello>) {
                return {{"op", "hello"}, {"version", v.version}};
            } else if constexpr (std::is_same_v<T, HelloReply>) {
                return {{"op", "hello"}, {"version", v.version}, {"learners", v.learners}};
            } else if constexpr (std::is_same_v<T, TrainEval>) {
                return {{"op", "train_eval"}, {"learner", v.learner}, {"n", v.n}, {"seed", v.seed}};
            } else if constexpr (std::is_same_v<T, Result>) {
                return {{"op", "result"},         {"learner", v.learner},   {"n", v.n},
                        {"train_acc", v.train_acc}, {"val_acc", v.val_acc}, {"cost_seconds", v.cost_seconds}};
            } else if constexpr (std::is_same_v<T, Shutdown>) {
                return {{"op", "shutdown"}};
            } else {
                return {{"op", "error"}, {"code", v.code}, {"message", v.message}};
            }
        },
        m);
}

// Serialized message without the trailing newline.
inline std::string encode(const Message& m) { return to_json(m).dump(); }

namespace detail {
template <typename T>
T field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError(std::string("bad type for field '") + key + "'");
    }
}

inline double number_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    if (!it->is_number()) throw ProtocolError(std::string("field '") + key + "' is not a number");
    return it->get<double>();
}

inline std::int64_t integer_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    if (!it->is_number_integer()) throw ProtocolError(std::string("field '") + key + "' is not an integer");
    return it->get<std::int64_t>();
}
}  // namespace detail

// Parses one line. Hello requests and replies share the "hello" op and are
// told apart by the presence of "learners".
inline Message decode(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("message is not a JSON object");
    const auto op = detail::field<std::string>(j, "op");
    if (op == "hello") {
        const int version = static_cast<int>(detail::integer_field(j, "version"));
        if (j.contains("learners"))
            return HelloReply{version, detail::field<std::vector<std::string>>(j, "learners")};
        return Hello{version};
    }
    if (op == "train_eval") {
        TrainEval t;
        t.learner = detail::field<std::string>(j, "learner");
        t.n = detail::integer_field(j, "n");
        auto it = j.find("seed");
        if (it == j.end() || !it->is_number_unsigned()) throw ProtocolError("bad or missing seed");
        t.seed = it->get<std::uint64_t>();
        return t;
    }
    if (op == "result") {
        Result r;
        r.learner = detail::field<std::string>(j, "learner");
        r.n = detail::integer_field(j, "n");
        r.train_acc = detail::number_field(j, "train_acc");
        r.val_acc = detail::number_field(j, "val_acc");
        r.cost_seconds = detail::number_field(j, "cost_seconds");
        return r;
    }
    if (op == "shutdown") return Shutdown{};
    if (op == "error") {
        Error e;
        e.code = detail::field<std::string>(j, "code");
        auto it = j.find("message");
        if (it != j.end() && it->is_string()) e.message = it->get<std::string>();
        return e;
    }
    throw ProtocolError("unknown op '" + op + "'");
}

}  // namespace daub::protocol
