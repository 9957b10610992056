#include "respec/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "respec/error.hpp"

namespace respec {

using nlohmann::json;

namespace {

constexpr double kMaxRate = 1000.0;

const std::regex kSessionId("[A-Za-z0-9_-]{1,64}");

json with_version(json j) {
    j["v"] = kSchemaVersion;
    return j;
}

} // namespace

ServiceConfig service_config_from_env(ServiceConfig base) {
    if (const char* dir = std::getenv("RESPEC_DATA_DIR"); dir && *dir) base.data_dir = dir;
    return base;
}

json list_scenarios(const std::filesystem::path& scenario_dir) {
    json out = json::array();
    for (const auto& name : builtin_names())
        out.push_back({{"name", name}, {"description", builtin_world(name).description}, {"source", "builtin"}});
    std::error_code ec;
    if (scenario_dir.empty() || !std::filesystem::is_directory(scenario_dir, ec)) return out;
    std::set<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(scenario_dir, ec))
        if (entry.path().extension() == ".json") files.insert(entry.path());
    for (const auto& path : files) {
        try {
            ScenarioScript s = load_scenario(path.string());
            out.push_back({{"name", s.name}, {"description", s.description}, {"source", path.string()}});
        } catch (const Error&) {
            // Unreadable files are not offered.
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SessionHost

SessionHost::SessionHost(std::string id, ServiceConfig config)
    : id_(std::move(id)), config_(std::move(config)), rate_(config_.rate) {}

double SessionHost::period_s() const {
    double dt = session_ ? session_->script().dt : 0.1;
    return dt / rate_;
}

json SessionHost::ack(const std::string& cmd, bool ok, const json& req, const std::string& error) const {
    json j{{"v", kSchemaVersion}, {"type", "ack"}, {"cmd", cmd}, {"ok", ok}};
    if (!req.is_null()) j["req"] = req;
    if (!error.empty()) j["error"] = error;
    return j;
}

json SessionHost::state_update() const {
    json j;
    if (session_) {
        j = session_->state_json();
        j["scenario"] = session_->script().name;
        j["finished"] = session_->finished();
        j["stop_reason"] = session_->stop_reason();
    } else {
        j = json::object();
        j["scenario"] = nullptr;
        j["finished"] = false;
    }
    j["type"] = "state_update";
    j["v"] = kSchemaVersion;
    j["session"] = id_;
    j["running"] = session_ && !paused_ && !session_->finished();
    j["rate"] = rate_;
    return j;
}

std::filesystem::path SessionHost::persist() const {
    if (!session_) throw Error(ErrorCode::NotFound, "no scenario loaded");
    auto dir = config_.data_dir / id_;
    session_->write(dir);
    return dir;
}

std::optional<json> SessionHost::tick() {
    if (!session_ || paused_ || session_->finished()) return std::nullopt;
    session_->step();
    ++ticks_;
    if (session_->finished() || ticks_ % std::max(1, config_.decimation) == 0) return state_update();
    return std::nullopt;
}

json SessionHost::handle(const std::string& text, std::vector<json>& broadcast) {
    json msg;
    try {
        msg = json::parse(text);
    } catch (const json::exception&) {
        return ack("", false, nullptr, "parse");
    }
    if (!msg.is_object()) return ack("", false, nullptr, "parse");
    const json req = msg.contains("req") ? msg["req"] : json(nullptr);
    const std::string cmd = msg.value("type", std::string());
    if (msg.contains("v") && msg["v"] != kSchemaVersion) return ack(cmd, false, req, "version");

    try {
        if (cmd == "load_scenario") {
            ScenarioScript script;
            if (msg.contains("body"))
                script = scenario_from_json(msg["body"]);
            else
                script = load_scenario(msg.at("name").get<std::string>());
            auto next = std::make_unique<Session>(std::move(script));
            next->set_stop_on_acceptance(false);
            if (session_ && !session_->trace().empty()) persist();
            session_ = std::move(next);
            paused_ = msg.value("paused", false);
            ticks_ = 0;
            json a = ack(cmd, true, req);
            a["scenario"] = session_->script().name;
            a["header"] = session_->header_json();
            broadcast.push_back(state_update());
            return a;
        }
        if (cmd == "set_rate") {
            double x = msg.at("rate").get<double>();
            if (!(x > 0.0) || x > kMaxRate) return ack(cmd, false, req, "rate must lie in (0, 1000]");
            rate_ = x;
            broadcast.push_back(state_update());
            return ack(cmd, true, req);
        }
        if (!session_) return ack(cmd, false, req, "no scenario loaded");

        if (cmd == "modify") {
            ModificationRecord rec = session_->modify_now(msg.at("command").get<std::string>());
            json j{{"v", kSchemaVersion},
                   {"type", "modification_result"},
                   {"cmd", cmd},
                   {"ok", rec.result.ok},
                   {"kind", rec.kind},
                   {"summary", rec.summary},
                   {"timing_ms", rec.result.timing_ms},
                   {"cost", to_string(rec.result.cost.cost)},
                   {"estimate_ms", rec.result.cost.estimate_ms},
                   {"feedback", json::array()}};
            for (const auto& f : rec.result.feedback)
                j["feedback"].push_back(
                    {{"kind", to_string(f.kind)}, {"prop", f.prop}, {"selector", f.selector}, {"message", f.message}});
            if (!rec.result.ok) {
                j["error"] = rec.result.error;
                j["error_code"] = rec.result.error_code;
            }
            if (!req.is_null()) j["req"] = req;
            broadcast.push_back(state_update());
            return j;
        }
        if (cmd == "fire_event") {
            session_->fire_event(msg.at("name").get<std::string>());
            return ack(cmd, true, req);
        }
        if (cmd == "pause" || cmd == "resume") {
            paused_ = cmd == "pause";
            broadcast.push_back(state_update());
            return ack(cmd, true, req);
        }
        if (cmd == "close") {
            auto dir = persist();
            session_.reset();
            paused_ = false;
            json a = ack(cmd, true, req);
            a["dir"] = dir.string();
            broadcast.push_back(state_update());
            return a;
        }
        return ack(cmd, false, req, "unknown command");
    } catch (const Error& e) {
        return ack(cmd, false, req, e.what());
    } catch (const json::exception& e) {
        return ack(cmd, false, req, std::string("invalid message: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Transport

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Client;

/// Control loop of one session id: a worker thread owns the SessionHost.
class LiveSession {
public:
    LiveSession(std::string id, const ServiceConfig& config, asio::io_context& io)
        : host_(std::move(id), config), io_(io), worker_([this](std::stop_token st) { loop(st); }) {}

    ~LiveSession() { shutdown(); }

    void shutdown() {
        worker_.request_stop();
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    void submit(std::weak_ptr<Client> from, std::string text) {
        {
            std::lock_guard lock(mutex_);
            inbox_.emplace_back(std::move(from), std::move(text));
        }
        cv_.notify_all();
    }

    void subscribe(const std::shared_ptr<Client>& c);
    void unsubscribe(const Client* c);

    /// Runs on the worker; persists a loaded session.
    void persist_now() {
        std::lock_guard lock(host_mutex_);
        if (host_.loaded() && !host_.session()->trace().empty()) {
            try {
                host_.persist();
            } catch (const Error& e) {
                std::cerr << "respec: " << e.what() << "\n";
            }
        }
    }

private:
    void loop(std::stop_token st);
    void deliver(const std::weak_ptr<Client>& to, json reply, std::vector<json> broadcast);

    SessionHost host_;
    std::mutex host_mutex_;
    asio::io_context& io_;
    std::mutex mutex_;
    std::condition_variable_any cv_;
    std::deque<std::pair<std::weak_ptr<Client>, std::string>> inbox_;
    // Touched on the I/O thread only.
    std::vector<std::weak_ptr<Client>> subscribers_;
    std::jthread worker_;
};

/// One websocket connection. All members are touched on the I/O thread only.
class Client : public std::enable_shared_from_this<Client> {
public:
    Client(tcp::socket socket, std::size_t queue_limit) : ws_(std::move(socket)), limit_(queue_limit) {}

    void accept(http::request<http::string_body> req, std::shared_ptr<LiveSession> session) {
        session_ = std::move(session);
        upgrade_ = std::move(req);
        ws_.async_accept(upgrade_, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->session_->subscribe(self);
            self->read();
        });
    }

    void send(const json& msg) {
        if (closed_) return;
        const bool is_state = msg.value("type", std::string()) == "state_update";
        if (is_state && queue_.size() >= limit_) {
            // Slow reader: keep only the newest state.
            for (auto it = queue_.begin() + (writing_ ? 1 : 0); it != queue_.end(); ++it)
                if (it->second) {
                    it->first = msg.dump();
                    return;
                }
        }
        queue_.emplace_back(msg.dump(), is_state);
        if (!writing_) write();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->session_->unsubscribe(self.get());
                return;
            }
            self->session_->submit(self, beast::buffers_to_string(self->buffer_.data()));
            self->buffer_.consume(self->buffer_.size());
            self->read();
        });
    }

    void write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(asio::buffer(queue_.front().first), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->queue_.pop_front();
            self->writing_ = false;
            if (ec) {
                self->closed_ = true;
                self->queue_.clear();
                return;
            }
            if (!self->queue_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    http::request<http::string_body> upgrade_;
    beast::flat_buffer buffer_;
    std::deque<std::pair<std::string, bool>> queue_;
    std::size_t limit_;
    bool writing_ = false;
    bool closed_ = false;
    std::shared_ptr<LiveSession> session_;
};

void LiveSession::subscribe(const std::shared_ptr<Client>& c) {
    subscribers_.push_back(c);
    json hello;
    {
        std::lock_guard lock(host_mutex_);
        hello = host_.state_update();
    }
    c->send(hello);
}

void LiveSession::unsubscribe(const Client* c) {
    std::erase_if(subscribers_, [c](const std::weak_ptr<Client>& w) {
        auto s = w.lock();
        return !s || s.get() == c;
    });
}

void LiveSession::deliver(const std::weak_ptr<Client>& to, json reply, std::vector<json> broadcast) {
    asio::post(io_, [this, to, reply = std::move(reply), broadcast = std::move(broadcast)] {
        if (!reply.is_null())
            if (auto c = to.lock()) c->send(reply);
        for (const auto& m : broadcast)
            for (const auto& w : subscribers_)
                if (auto c = w.lock()) c->send(m);
    });
}

void LiveSession::loop(std::stop_token st) {
    using clock = std::chrono::steady_clock;
    auto next = clock::now();
    while (!st.stop_requested()) {
        std::deque<std::pair<std::weak_ptr<Client>, std::string>> work;
        {
            std::unique_lock lock(mutex_);
            cv_.wait_until(lock, st, next, [&] { return !inbox_.empty(); });
            work.swap(inbox_);
        }
        if (st.stop_requested()) break;
        for (auto& [from, text] : work) {
            std::vector<json> broadcast;
            json reply;
            {
                std::lock_guard lock(host_mutex_);
                reply = host_.handle(text, broadcast);
            }
            deliver(from, std::move(reply), std::move(broadcast));
        }
        const auto now = clock::now();
        if (now < next) continue;
        std::optional<json> update;
        double period;
        {
            std::lock_guard lock(host_mutex_);
            update = host_.tick();
            period = host_.period_s();
        }
        if (update) deliver({}, nullptr, {std::move(*update)});
        next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(period));
        // After a long pause or a slow step, resume from now instead of catching up.
        if (next < now) next = now + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(period));
    }
}

} // namespace

struct Service::Impl {
    explicit Impl(ServiceConfig c) : config(std::move(c)), acceptor(io) {}

    ServiceConfig config;
    asio::io_context io;
    tcp::acceptor acceptor;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions;
    std::vector<std::weak_ptr<Client>> clients;
    std::thread io_thread;
    std::atomic<bool> running{false};
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stop_requested = false;

    void request_stop() {
        {
            std::lock_guard lock(stop_mutex);
            stop_requested = true;
        }
        stop_cv.notify_all();
    }

    std::shared_ptr<LiveSession> session(const std::string& id) {
        auto& s = sessions[id];
        if (!s) s = std::make_shared<LiveSession>(id, config, io);
        return s;
    }

    void do_accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            on_connection(std::move(socket));
            do_accept();
        });
    }

    void on_connection(tcp::socket socket) {
        struct Pending {
            beast::tcp_stream stream;
            beast::flat_buffer buffer;
            http::request<http::string_body> req;
            explicit Pending(tcp::socket s) : stream(std::move(s)) {}
        };
        auto p = std::make_shared<Pending>(std::move(socket));
        http::async_read(p->stream, p->buffer, p->req, [this, p](beast::error_code ec, std::size_t) {
            if (ec) return;
            const std::string target(p->req.target());
            if (websocket::is_upgrade(p->req)) {
                static const std::string prefix = "/session/";
                std::string id = target.rfind(prefix, 0) == 0 ? target.substr(prefix.size()) : "";
                if (!std::regex_match(id, kSessionId)) {
                    respond(p, http::status::not_found, json{{"error", "expected /session/{id}"}});
                    return;
                }
                auto client = std::make_shared<Client>(p->stream.release_socket(), config.client_queue_limit);
                clients.push_back(client);
                client->accept(std::move(p->req), session(id));
                return;
            }
            if (p->req.method() != http::verb::get) {
                respond(p, http::status::method_not_allowed, json{{"error", "GET only"}});
            } else if (target == "/health") {
                respond(p, http::status::ok, with_version({{"status", "ok"}, {"sessions", sessions.size()}}));
            } else if (target == "/scenarios") {
                respond(p, http::status::ok, with_version({{"scenarios", list_scenarios(config.scenario_dir)}}));
            } else {
                respond(p, http::status::not_found, json{{"error", "not found"}});
            }
        });
    }

    template <class P>
    void respond(const std::shared_ptr<P>& p, http::status status, const json& body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, p->req.version());
        res->set(http::field::content_type, "application/json");
        res->keep_alive(false);
        res->body() = body.dump();
        res->prepare_payload();
        http::async_write(p->stream, *res, [p, res](beast::error_code, std::size_t) {
            beast::error_code ec;
            p->stream.socket().shutdown(tcp::socket::shutdown_send, ec);
        });
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

unsigned short Service::start() {
    auto& d = *impl_;
    if (d.running) return d.acceptor.local_endpoint().port();
    tcp::endpoint ep(asio::ip::make_address(d.config.address), d.config.port);
    d.acceptor.open(ep.protocol());
    d.acceptor.set_option(asio::socket_base::reuse_address(true));
    d.acceptor.bind(ep);
    d.acceptor.listen();
    d.do_accept();
    d.running = true;
    d.io_thread = std::thread([&d] {
        auto guard = asio::make_work_guard(d.io);
        d.io.run();
    });
    return d.acceptor.local_endpoint().port();
}

void Service::stop() {
    auto& d = *impl_;
    d.request_stop();
    if (!d.running.exchange(false)) return;
    std::promise<void> closed;
    asio::post(d.io, [&d, &closed] {
        beast::error_code ec;
        d.acceptor.close(ec);
        for (auto& w : d.clients)
            if (auto c = w.lock()) c->close();
        closed.set_value();
    });
    closed.get_future().wait();
    for (auto& [id, s] : d.sessions) {
        s->shutdown();
        s->persist_now();
    }
    d.io.stop();
    d.io_thread.join();
    d.sessions.clear();
    d.clients.clear();
}

void Service::run() {
    auto& d = *impl_;
    asio::signal_set signals(d.io, SIGINT, SIGTERM);
    signals.async_wait([&d](beast::error_code ec, int) {
        if (!ec) d.request_stop();
    });
    start();
    {
        std::unique_lock lock(d.stop_mutex);
        d.stop_cv.wait(lock, [&d] { return d.stop_requested; });
    }
    // The signal set lives on this frame; cancel it on the I/O thread first.
    std::promise<void> cancelled;
    asio::post(d.io, [&] {
        beast::error_code ec;
        signals.cancel(ec);
        cancelled.set_value();
    });
    if (d.running) cancelled.get_future().wait();
    stop();
}

} // namespace respec
