// Submits a copy and a kernel through an executor, bridges the kernel's
// event into a future by polling, and continues on the worker pool.

#include <cstdio>
#include <vector>

#include "evbridge/executors/device_executor.hpp"
#include "evbridge/integration/integration.hpp"

using namespace evbridge;

int main() {
  PollRegistry registry;
  vdev::VirtualDevice device;  // real-time simulator thread
  WorkerPool pool({.workers = 2, .poll_hook = &registry});
  Integration bridge(pool, registry, device, IntegrationMode::Polling);
  exec::DeviceExecutor gpu(bridge, 0);

  std::vector<double> data(512, 1.0);
  gpu.post(vdev::DeviceOp::copy_h2d(data.size() * sizeof(double)));
  auto done = gpu.async_execute(vdev::DeviceOp::kernel(data.size(), [&] {
                  for (double& d : data) d *= 3.0;
                }))
                  .then(pool, [&] {
                    double s = 0;
                    for (double d : data) s += d;
                    return s;
                  });

  std::printf("sum = %.1f\n", done.get());
  std::printf("polls = %llu, event waits = %llu\n",
              static_cast<unsigned long long>(registry.stats().polls),
              static_cast<unsigned long long>(device.counters().event_waits));
  pool.shutdown();
}
