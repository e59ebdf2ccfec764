#include "cmdinj/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstring>

#include "cmdinj/corpus.hpp"
#include "cmdinj/error.hpp"
#include "cmdinj/testgen.hpp"

#ifndef CMDINJ_RUNNER_SHIM
#define CMDINJ_RUNNER_SHIM ""
#endif

namespace cmdinj {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kCaptureLimit = 1 << 20;

// Keeps valid UTF-8 sequences and replaces stray bytes with '?'.
std::string sanitize_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len > 0 && i + len <= s.size() && is_valid_utf8(s.substr(i, len))) {
            out.append(s.substr(i, len));
            i += len;
        } else {
            out.push_back('?');
            ++i;
        }
    }
    return out;
}

std::string head_excerpt(std::string_view s) { return sanitize_utf8(s.substr(0, kExcerptLimit)); }

// Tracebacks end with the interesting line, so stderr keeps its tail.
std::string tail_excerpt(std::string_view s) {
    if (s.size() <= kExcerptLimit) return sanitize_utf8(s);
    return sanitize_utf8(s.substr(s.size() - kExcerptLimit));
}

std::optional<fs::path> find_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0) return fs::path(name);
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
    std::size_t pos = 0;
    while (pos <= dirs.size()) {
        auto colon = dirs.find(':', pos);
        if (colon == std::string::npos) colon = dirs.size();
        const fs::path candidate = fs::path(dirs.substr(pos, colon - pos)) / name;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate;
        pos = colon + 1;
    }
    return std::nullopt;
}

void set_limit(int resource, rlim_t value) {
    struct rlimit rl {value, value};
    ::setrlimit(resource, &rl);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(OutcomeStatus s) {
    switch (s) {
        case OutcomeStatus::Confirmed: return "confirmed";
        case OutcomeStatus::Refuted: return "refuted";
        case OutcomeStatus::Invalid: return "invalid";
    }
    return "invalid";
}

std::optional<OutcomeStatus> outcome_status_from_string(std::string_view s) {
    if (s == "confirmed") return OutcomeStatus::Confirmed;
    if (s == "refuted") return OutcomeStatus::Refuted;
    if (s == "invalid") return OutcomeStatus::Invalid;
    return std::nullopt;
}

RunnerCommand default_runner() {
    std::error_code ec;
    const auto self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const auto beside = self.parent_path() / "runner_shim.py";
        if (fs::exists(beside)) return {{"python3", beside.string()}};
    }
    return {{"python3", CMDINJ_RUNNER_SHIM}};
}

RunRecord parse_run_record(std::string_view line) {
    try {
        const auto j = Json::parse(line);
        RunRecord r;
        r.status = j.at("status").get<std::string>();
        if (r.status != "passed" && r.status != "failed" && r.status != "error") {
            throw Error(ErrorCode::FormatError, "unknown runner status: " + r.status);
        }
        if (j.contains("error_kind") && !j.at("error_kind").is_null()) r.error_kind = j.at("error_kind").get<std::string>();
        r.duration_ms = j.at("duration_ms").get<std::int64_t>();
        r.stdout_text = j.at("stdout").get<std::string>();
        r.stderr_text = j.at("stderr").get<std::string>();
        if (r.status == "error" && (!r.error_kind || r.error_kind->empty())) {
            throw Error(ErrorCode::FormatError, "error record without error_kind");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("runner record: ") + e.what());
    }
}

OutcomeStatus map_status(std::string_view runner_status, bool sentinel_deleted) {
    if (sentinel_deleted) return OutcomeStatus::Confirmed;
    if (runner_status == "passed") return OutcomeStatus::Confirmed;
    if (runner_status == "failed") return OutcomeStatus::Refuted;
    return OutcomeStatus::Invalid;
}

std::string error_kind_for(std::string_view cls) {
    if (cls == "ImportError" || cls == "ModuleNotFoundError") return "import_error";
    if (cls == "FileNotFoundError" || cls == "NotADirectoryError" || cls == "IsADirectoryError" ||
        cls == "PermissionError") {
        return "path_error";
    }
    return "other";
}

ExecutionOutcome execute(const fs::path& test_path, const ResourceLimits& limits, const RunnerCommand& runner,
                         const std::string& case_id) {
    if (!fs::is_regular_file(test_path)) throw Error(ErrorCode::WorkspaceError, "test file missing: " + test_path.string());
    const fs::path workdir = fs::absolute(test_path).parent_path();
    const fs::path sentinel = workdir / kSentinelFileName;
    if (!fs::exists(sentinel)) throw Error(ErrorCode::WorkspaceError, "sentinel missing before run: " + sentinel.string());
    if (runner.argv.empty()) throw Error(ErrorCode::RunnerNotFound, "empty runner command");
    const auto exe = find_executable(runner.argv[0]);
    if (!exe) throw Error(ErrorCode::RunnerNotFound, "runner executable not found: " + runner.argv[0]);
    for (std::size_t i = 1; i < runner.argv.size(); ++i) {
        const auto& a = runner.argv[i];
        if (a.size() > 3 && a.compare(a.size() - 3, 3, ".py") == 0 && !fs::exists(a)) {
            throw Error(ErrorCode::RunnerNotFound, "runner shim not found: " + a);
        }
    }

    std::vector<std::string> args = runner.argv;
    args[0] = exe->string();
    args.push_back(fs::absolute(test_path).string());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    std::vector<std::string> env_store{
        "PATH=/usr/local/bin:/usr/bin:/bin", "HOME=" + workdir.string(), "TMPDIR=" + workdir.string(),
        "LANG=C.UTF-8",                      "PYTHONDONTWRITEBYTECODE=1", "PYTHONNOUSERSITE=1",
        "PYTHONHASHSEED=0",
    };
    std::vector<char*> envp;
    for (auto& e : env_store) envp.push_back(e.data());
    envp.push_back(nullptr);

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
        throw Error(ErrorCode::WorkspaceError, std::string("pipe: ") + std::strerror(errno));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::WorkspaceError, std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(workdir.c_str()) != 0) ::_exit(126);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, 0);
        ::dup2(out_pipe[1], 1);
        ::dup2(err_pipe[1], 2);
        set_limit(RLIMIT_AS, static_cast<rlim_t>(limits.memory_mb) << 20);
        set_limit(RLIMIT_FSIZE, static_cast<rlim_t>(limits.max_file_mb) << 20);
        set_limit(RLIMIT_CORE, 0);
        set_limit(RLIMIT_CPU, static_cast<rlim_t>(limits.timeout_s + 5));
        ::execve(argv[0], argv.data(), envp.data());
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    std::string out;
    std::string err;
    std::array<pollfd, 2> fds{pollfd{out_pipe[0], POLLIN, 0}, pollfd{err_pipe[0], POLLIN, 0}};
    bool open_out = true;
    bool open_err = true;
    bool timed_out = false;
    bool exited = false;
    int wstatus = 0;
    std::optional<std::chrono::steady_clock::time_point> exited_at;
    char buf[65536];

    while (open_out || open_err || !exited) {
        const double elapsed = seconds_since(t0);
        if (elapsed >= limits.timeout_s) {
            timed_out = !exited;
            break;
        }
        if (!exited) {
            const pid_t w = ::waitpid(pid, &wstatus, WNOHANG);
            if (w == pid) {
                exited = true;
                exited_at = std::chrono::steady_clock::now();
            }
        }
        // Grandchildren may keep the pipes open; stop draining shortly after exit.
        if (exited && exited_at && seconds_since(*exited_at) > 0.5) break;
        if (!open_out && !open_err) {
            ::usleep(2000);
            continue;
        }
        fds[0].fd = open_out ? out_pipe[0] : -1;
        fds[1].fd = open_err ? err_pipe[0] : -1;
        const int ready = ::poll(fds.data(), fds.size(), 20);
        if (ready < 0 && errno != EINTR) break;
        for (int k = 0; k < 2; ++k) {
            if (fds[k].fd < 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t n = ::read(fds[k].fd, buf, sizeof buf);
            std::string& sink = k == 0 ? out : err;
            if (n > 0) {
                if (sink.size() < kCaptureLimit) sink.append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
                (k == 0 ? open_out : open_err) = false;
            }
        }
    }
    ::killpg(pid, SIGKILL);
    if (!exited) {
        ::waitpid(pid, &wstatus, 0);
    }
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    ExecutionOutcome o;
    o.case_id = case_id;
    o.duration_s = seconds_since(t0);
    o.sentinel_deleted = !fs::exists(sentinel);

    if (timed_out) {
        o.status = o.sentinel_deleted ? OutcomeStatus::Confirmed : OutcomeStatus::Invalid;
        o.error_kind = "timeout";
        o.error_detail = "killed after " + std::to_string(limits.timeout_s) + " s";
        o.stdout_excerpt = head_excerpt(out);
        o.stderr_excerpt = tail_excerpt(err);
        if (o.status == OutcomeStatus::Confirmed) o.error_kind.reset();
        return o;
    }

    std::optional<RunRecord> record;
    std::string record_problem;
    const auto end = out.find_last_not_of("\r\n");
    if (end != std::string::npos) {
        const auto start = out.rfind('\n', end);
        const auto line = out.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
        try {
            record = parse_run_record(line);
        } catch (const Error& e) {
            record_problem = e.what();
        }
    } else {
        record_problem = "runner produced no output";
    }
    const bool clean_exit = WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == 0;
    if (!record || !clean_exit) {
        o.status = map_status("", o.sentinel_deleted);
        o.error_kind = "runner_crash";
        if (WIFSIGNALED(wstatus)) {
            o.error_detail = "runner killed by signal " + std::to_string(WTERMSIG(wstatus));
        } else if (!clean_exit) {
            o.error_detail = "runner exited with status " + std::to_string(WEXITSTATUS(wstatus));
        } else {
            o.error_detail = record_problem;
        }
        o.stdout_excerpt = head_excerpt(out);
        o.stderr_excerpt = tail_excerpt(err);
        if (o.status == OutcomeStatus::Confirmed) o.error_kind.reset();
        return o;
    }

    o.runner_status = record->status;
    o.stdout_excerpt = head_excerpt(record->stdout_text);
    o.stderr_excerpt = tail_excerpt(record->stderr_text + err);
    o.status = map_status(record->status, o.sentinel_deleted);
    if (record->error_kind) o.error_detail = *record->error_kind;
    if (o.status == OutcomeStatus::Invalid) o.error_kind = error_kind_for(o.error_detail);
    return o;
}

Json outcome_to_json(const ExecutionOutcome& o) {
    Json j;
    j["case_id"] = o.case_id;
    j["status"] = to_string(o.status);
    j["error_kind"] = o.error_kind ? Json(*o.error_kind) : Json(nullptr);
    j["error_detail"] = o.error_detail;
    j["duration_s"] = o.duration_s;
    j["sentinel_deleted"] = o.sentinel_deleted;
    j["runner_status"] = o.runner_status;
    j["stdout_excerpt"] = o.stdout_excerpt;
    j["stderr_excerpt"] = o.stderr_excerpt;
    return j;
}

ExecutionOutcome outcome_from_json(const Json& j) {
    try {
        ExecutionOutcome o;
        o.case_id = j.at("case_id").get<std::string>();
        const auto status = outcome_status_from_string(j.at("status").get<std::string>());
        if (!status) throw Error(ErrorCode::FormatError, "unknown outcome status");
        o.status = *status;
        if (!j.at("error_kind").is_null()) o.error_kind = j.at("error_kind").get<std::string>();
        o.error_detail = j.at("error_detail").get<std::string>();
        o.duration_s = j.at("duration_s").get<double>();
        o.sentinel_deleted = j.at("sentinel_deleted").get<bool>();
        o.runner_status = j.at("runner_status").get<std::string>();
        o.stdout_excerpt = j.at("stdout_excerpt").get<std::string>();
        o.stderr_excerpt = j.at("stderr_excerpt").get<std::string>();
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("outcome record: ") + e.what());
    }
}

}  // namespace cmdinj
