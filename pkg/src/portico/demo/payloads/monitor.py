# Pass-through interceptor: counts what flows through "tap" and forwards it
# downstream. "tally" reports the count. list.append keeps the count exact
# under concurrent traffic.


def create(env):
    seen = []
    out = env.port("out")

    class Tap:
        def process(self, value):
            seen.append(1)
            return out.process(value)

    class Tally:
        def process(self, _):
            return len(seen)

    class Monitor:
        tap = Tap()
        tally = Tally()

    return Monitor()
