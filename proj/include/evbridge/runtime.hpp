#pragma once

#include "evbridge/runtime/concurrent_inbox.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/poll_registry.hpp"
#include "evbridge/runtime/scheduler.hpp"
#include "evbridge/runtime/task.hpp"
#include "evbridge/runtime/worker_pool.hpp"
