import math

# Sliding local map
WINDOW_SIZE = 2.0
# Sample the visible window edges as well as the occlusion frontiers:
WINDOW_ARCS_AS_FRONTIERS = True

# Frontier sampling
DELTA_L = 0.25
N_DIRS = 8
V_MAX = 1.2
NEIGHBOR_RADIUS_FACTOR = 0.5
VELOCITY_PRUNE_STEP = 1e-4

# Cost terms
THETA_THRES = math.pi / 2
F_A = 2.0
F_THETA = 0.1
DELTA_V = 1e-3
PENALTY = -V_MAX
TAU_REF = 0.5
RESTITUTION_N = 0.7
RESTITUTION_T = 1.0
D_MIN = 0.05
W_P = 1.0
W_R = 0.1
W_V = 4.0

# Strategy label -> (w_p, w_r, w_v)
STRATEGIES = {
    'harness': (1.0, 0.1, 4.0),
    'high_risk': (1.0, 0.1, 0.0),
    'low_risk': (1.0, 100.0, 0.0),
}

# Extra margin kept from sensed obstacles, by strategy label:
STRATEGY_CLEARANCE = {
    'low_risk': 0.05,
}
# Ranked candidates whose references are checked against the margin:
CLEARANCE_ATTEMPTS = 20

# Trajectory
P_SAFE = 1.2
N_SAMPLES = 50
PREDICTED_BOUNDARY_LENGTH = WINDOW_SIZE

# Controller
KP = 3.0
KI = 0.0
KD = 0.3
CONTROL_PERIOD = 0.05

# Simulator
DT = 0.01
ROBOT_RADIUS = 0.08
# None selects exact sensing; an integer selects that many beams:
N_BEAMS = None
GOAL_RANGE_SIGMA = 0.0
GOAL_BEARING_SIGMA = 0.0
GOAL_TOLERANCE = 0.1
TIMEOUT = 60.0
ACTUATION_SIGMA = 0.02
WALL_THICKNESS = 0.1
CONTACT_SKIN = 1e-7
MAX_BOUNCES_PER_STEP = 4
# A contact with an obstacle ends once the robot is this far from it:
CONTACT_RELEASE_DISTANCE = 0.02

# Sweeps
T_MAP_GRID = [0.2, 0.4, 0.6, 0.8, 1.0]
TRIALS_PER_CELL = 20
BASE_SEED = 0

# Trial store; overridden by the PLANNER_TRIALS_DATABASE_URL environment
# variable.
TRIALS_DATABASE_NAME = 'trials.sqlite'
