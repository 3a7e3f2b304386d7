#include "spreadscope/fetch.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "spreadscope/error.hpp"

namespace spreadscope {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw FetchError(fmt::format("endpoint '{}' has no scheme", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::mutex& cache_file_mutex(const std::filesystem::path& file) {
    static std::mutex registry_guard;
    static std::map<std::string, std::mutex> locks;
    std::lock_guard lock(registry_guard);
    return locks[file.lexically_normal().string()];
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string fetch_series(const std::string& series_id, const std::string& endpoint,
                         const std::filesystem::path& cache_dir) {
    if (series_id.empty() || series_id.find_first_of("/\\.") != std::string::npos) {
        throw FetchError(fmt::format("invalid series id '{}'", series_id));
    }
    const auto file = cache_dir / (series_id + ".csv");
    std::lock_guard lock(cache_file_mutex(file));
    if (std::filesystem::exists(file)) return read_file(file);

    const auto [origin, path] = split_endpoint(endpoint);
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    client.set_follow_location(true);
    const auto query = path + (path.find('?') == std::string::npos ? "?id=" : "&id=") + series_id;
    auto res = client.Get(query);
    if (!res) {
        throw FetchError(fmt::format("fetching {} from {}: {}", series_id, origin,
                                     httplib::to_string(res.error())));
    }
    if (res->status != 200) {
        throw FetchError(fmt::format("fetching {} from {}: HTTP status {}", series_id, origin,
                                     res->status));
    }

    std::filesystem::create_directories(cache_dir);
    auto tmp = file;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << res->body;
        if (!out) throw FetchError(fmt::format("cannot write cache file {}", tmp.string()));
    }
    std::filesystem::rename(tmp, file);
    return res->body;
}

}  // namespace spreadscope
