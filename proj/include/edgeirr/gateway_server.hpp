#pragma once

// Stream-socket endpoint that real gateways connect to. Incoming sample and
// ack frames are handed to callbacks; outgoing commands are written to every
// connected gateway, which forwards them to its actuators.

#include "edgeirr/frame.hpp"

#include <arpa/inet.h>
#include <fmt/format.h>
#include <atomic>
#include <functional>
#include <mutex>
#include <netinet/in.h>
#include <poll.h>
#include <string>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>
#include <vector>

namespace edgeirr::gateway {

class GatewayServer
{
public:
    using SampleHandler = std::function<void(const MoistureSample&)>;
    using AckHandler = std::function<void(const ValveAck&)>;

    GatewayServer(SampleHandler on_sample, AckHandler on_ack)
        : on_sample_(std::move(on_sample)), on_ack_(std::move(on_ack))
    {
    }

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    ~GatewayServer() { stop(); }

    /// Binds host:port (port 0 picks a free one) and starts accepting.
    /// Returns the bound port.
    int start(const std::string& host, int port)
    {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0)
            throw std::runtime_error("gateway: socket() failed");
        int yes = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw std::runtime_error("gateway: bad address " + host);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(listen_fd_, 8) != 0)
        {
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw std::runtime_error(fmt::format("gateway: cannot listen on {}:{}", host, port));
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        return port_;
    }

    void stop()
    {
        if (!running_.exchange(false))
            return;
        if (accept_thread_.joinable())
            accept_thread_.join();
        ::close(listen_fd_);
        listen_fd_ = -1;
        std::vector<std::thread> readers;
        {
            std::lock_guard lock(mu_);
            for (int fd : clients_)
                ::shutdown(fd, SHUT_RDWR);
            readers.swap(readers_);
        }
        for (auto& t : readers)
            t.join();
        std::lock_guard lock(mu_);
        for (int fd : clients_)
            ::close(fd);
        clients_.clear();
    }

    /// Writes a command frame to every connected gateway.
    void send(const ValveCommand& cmd)
    {
        const auto bytes = frame::encode(cmd);
        std::lock_guard lock(mu_);
        for (int fd : clients_)
            write_all(fd, bytes);
    }

    int port() const noexcept { return port_; }

    std::size_t connections() const
    {
        std::lock_guard lock(mu_);
        return clients_.size();
    }

private:
    static void write_all(int fd, const std::vector<std::uint8_t>& bytes)
    {
        std::size_t off = 0;
        while (off < bytes.size())
        {
            const auto n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n <= 0)
                return;
            off += static_cast<std::size_t>(n);
        }
    }

    void accept_loop()
    {
        while (running_)
        {
            pollfd p{listen_fd_, POLLIN, 0};
            if (::poll(&p, 1, 100) <= 0)
                continue;
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0)
                continue;
            std::lock_guard lock(mu_);
            clients_.push_back(fd);
            readers_.emplace_back([this, fd] { read_loop(fd); });
        }
    }

    void read_loop(int fd)
    {
        frame::Decoder dec;
        std::uint8_t buf[512];
        while (running_)
        {
            const auto n = ::recv(fd, buf, sizeof buf, 0);
            if (n <= 0)
                break;
            dec.feed(buf, static_cast<std::size_t>(n));
            try
            {
                while (auto f = dec.next())
                {
                    if (auto* s = std::get_if<MoistureSample>(&*f))
                        on_sample_(*s);
                    else if (auto* a = std::get_if<ValveAck>(&*f))
                        on_ack_(*a);
                }
            }
            catch (const frame::FrameError&)
            {
                break; // protocol error: drop the connection
            }
        }
        std::lock_guard lock(mu_);
        std::erase(clients_, fd);
        ::close(fd);
    }

    SampleHandler on_sample_;
    AckHandler on_ack_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::vector<std::thread> readers_;
    std::vector<int> clients_;
    mutable std::mutex mu_;
};

} // namespace edgeirr::gateway
