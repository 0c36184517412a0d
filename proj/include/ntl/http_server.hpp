#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ntl/service.hpp"

namespace httplib {
class Server;
}

namespace ntl {

/// Binds the review endpoints of `service` to an httplib server. When
/// `static_dir` is set it is mounted at "/" for the UI bundle; otherwise "/"
/// returns a JSON index of the endpoints.
std::unique_ptr<httplib::Server> make_http_server(ReviewService& service,
                                                  const std::optional<std::filesystem::path>& static_dir = {});

} // namespace ntl
