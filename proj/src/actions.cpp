#include "scu/actions.hpp"

namespace scu {

std::string_view to_string(StatusCommand c) {
  switch (c) {
    case StatusCommand::Start: return "Start";
    case StatusCommand::Stop: return "Stop";
    case StatusCommand::DoNothing: return "DoNothing";
  }
  return "?";
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Microgrid: return "microgrid";
    case Level::Orchestrator: return "orchestrator";
    case Level::Genset: return "genset";
    case Level::Battery: return "battery";
    case Level::Wind: return "wind";
  }
  return "?";
}

}  // namespace scu
