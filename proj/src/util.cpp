#include "arcd/util.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <unistd.h>
#include <vector>

#include "arcd/errors.hpp"

namespace arcd {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ARCD_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr first_error;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    fs::path tmp = (dir.empty() ? fs::path(".") : dir) /
                   (target.filename().string() + ".tmp-" +
                    std::to_string(static_cast<unsigned long>(::getpid())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArError(ErrorCode::IoError, "cannot open '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ArError(ErrorCode::IoError, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ArError(ErrorCode::IoError,
                      "rename to '" + path + "' failed: " + ec.message());
    }
}

namespace log {

namespace {
Level g_level = Level::Quiet;
std::mutex g_mu;

void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mu);
    std::cerr << "[arcd " << tag << "] " << msg << "\n";
}
} // namespace

void set_level(Level lv) { g_level = lv; }
Level level() { return g_level; }

void info(const std::string& msg) {
    if (g_level >= Level::Info) emit("info", msg);
}

void debug(const std::string& msg) {
    if (g_level >= Level::Debug) emit("debug", msg);
}

} // namespace log

} // namespace arcd
