#include <chrono>
#include <thread>

#include "aquasonde/device_sim.hpp"

namespace aquasonde::sim {

std::size_t serve_paced(net::Socket& peer, std::span<const std::uint8_t> stream,
                        double frames_per_second) {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration<double>(1.0 / frames_per_second);
  const auto start = clock::now();
  std::size_t sent = 0;
  for (std::size_t i = 0; sent < stream.size(); ++i) {
    std::this_thread::sleep_until(start + std::chrono::duration_cast<clock::duration>(period * i));
    const auto chunk = stream.subspan(sent, std::min(wire::kFrameSize, stream.size() - sent));
    try {
      peer.write_all(chunk);
    } catch (const net::NetError&) {
      break;
    }
    sent += chunk.size();
  }
  return sent;
}

}  // namespace aquasonde::sim
