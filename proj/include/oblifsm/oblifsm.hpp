#pragma once

#include "oblifsm/bench.hpp"
#include "oblifsm/channel.hpp"
#include "oblifsm/fsm.hpp"
#include "oblifsm/garbling.hpp"
#include "oblifsm/meter.hpp"
#include "oblifsm/ot.hpp"
#include "oblifsm/paillier.hpp"
#include "oblifsm/protocol_2pc.hpp"
#include "oblifsm/protocol_3pc.hpp"
#include "oblifsm/session.hpp"
#include "oblifsm/wire.hpp"
