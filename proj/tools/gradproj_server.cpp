// gradproj-server: serve stored artifacts to the explorer over HTTP.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <iostream>

#include "gradproj/server.hpp"

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serve gradproj run artifacts over HTTP"};
    std::string addr = "127.0.0.1:8080";
    std::filesystem::path dir = "runs";
    app.add_option("--addr", addr, "host:port to bind");
    app.add_option("--artifacts-dir", dir, "Directory of artifact JSON files (created if missing)");
    CLI11_PARSE(app, argc, argv);

    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--addr must be host:port\n";
        return 2;
    }
    const std::string host = addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        std::cerr << "--addr must be host:port\n";
        return 2;
    }

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    gradproj::server::ArtifactStore store(dir);
    for (const auto& problem : store.load()) std::cerr << "skipped " << problem << "\n";
    gradproj::server::Api api(store);

    httplib::Server srv;
    gradproj::server::mount(srv, api);
    g_server = &srv;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    std::cerr << "serving " << store.ids().size() << " runs from " << dir.string() << " on " << host << ":" << port << "\n";
    if (!srv.listen(host, port)) {
        std::cerr << "cannot bind " << addr << "\n";
        return 1;
    }
    return 0;
}
