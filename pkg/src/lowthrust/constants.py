"""Physical constants and canonical unit helpers (SI base units)."""

# Standard gravitational acceleration used to convert specific impulse to
# exhaust velocity.  Fixed by convention; small errors are absorbed by Isp.
G0 = 9.80665  # m/s^2

# Sun gravitational parameter.
MU_SUN = 1.32712440018e20  # m^3/s^2

AU = 1.495978707e11  # m
DAY = 86400.0  # s
YEAR = 365.25 * DAY  # s

# Heliocentric reference scales at 1 AU, used to express propulsion ranges
# "at 1 AU equivalent" independently of the actual problem scale.
T0_1AU = (AU**3 / MU_SUN) ** 0.5  # s
V0_1AU = AU / T0_1AU  # m/s
A0_1AU = MU_SUN / AU**2  # m/s^2
