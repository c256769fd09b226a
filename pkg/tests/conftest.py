import time

# Wall-clock anchor for the suite's runtime budget check; the budget test
# file sorts last so it observes (nearly) the whole session.
SESSION_START = time.monotonic()
