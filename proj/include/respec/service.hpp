#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "respec/session.hpp"

namespace respec {

struct ServiceConfig {
    std::string address = "127.0.0.1";
    /// 0 picks a free port.
    unsigned short port = 8080;
    /// Extra scenario JSON files offered next to the builtins.
    std::filesystem::path scenario_dir;
    /// Persistence root; one subdirectory per session id.
    std::filesystem::path data_dir = "respec-data";
    /// Simulated seconds per wall-clock second.
    double rate = 1.0;
    /// Broadcast every n-th state_update.
    int decimation = 1;
    /// Outbound messages buffered per client before state updates are coalesced.
    std::size_t client_queue_limit = 64;
};

/// data_dir from RESPEC_DATA_DIR when set.
ServiceConfig service_config_from_env(ServiceConfig base = {});

/// Builtins plus *.json files in the scenario directory: [{name, description, source}].
nlohmann::json list_scenarios(const std::filesystem::path& scenario_dir);

/// Protocol state of one session id, independent of the transport. Not
/// thread-safe: the owning control loop serializes all calls.
class SessionHost {
public:
    SessionHost(std::string id, ServiceConfig config);

    /// Handles one client frame. Returns the single reply to the sender
    /// (ack or modification_result); messages for every subscriber are
    /// appended to `broadcast`.
    nlohmann::json handle(const std::string& text, std::vector<nlohmann::json>& broadcast);

    /// Advances one step when loaded, running and unfinished; returns the
    /// state_update to broadcast (after decimation), if any.
    std::optional<nlohmann::json> tick();

    /// Wall-clock seconds per control step at the current rate.
    double period_s() const;
    bool loaded() const { return session_ != nullptr; }
    bool paused() const { return paused_; }
    double rate() const { return rate_; }
    const Session* session() const { return session_.get(); }
    const std::string& id() const { return id_; }

    nlohmann::json state_update() const;

    /// Writes trace, modification log and summary under data_dir/id.
    /// Returns the directory; throws Io on failure.
    std::filesystem::path persist() const;

private:
    nlohmann::json ack(const std::string& cmd, bool ok, const nlohmann::json& req,
                       const std::string& error = {}) const;

    std::string id_;
    ServiceConfig config_;
    std::unique_ptr<Session> session_;
    bool paused_ = false;
    double rate_ = 1.0;
    long ticks_ = 0;
};

/// Websocket endpoint /session/{id}, HTTP GET /scenarios and /health.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts the I/O thread; returns the bound port.
    unsigned short start();
    /// Persists every loaded session, closes connections and joins all threads.
    void stop();
    /// start() and block until stop() is called from another thread or a signal arrives.
    void run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace respec
