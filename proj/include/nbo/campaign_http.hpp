#pragma once

// Eigen must precede httplib: <resolv.h> defines a `_res` macro.
#include "nbo/campaign.hpp"
#include "nbo/error.hpp"

#include <httplib.h>

namespace nbo::campaign {

/// Installs the campaign REST routes on `server`. The store must outlive it.
void register_routes(httplib::Server& server, CampaignStore& store);

/// HTTP status used for an error code.
int http_status(ErrorCode code);

}  // namespace nbo::campaign
