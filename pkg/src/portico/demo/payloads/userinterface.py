# Front component: looks up a keyword count, renders it as text.


def create(env):
    finder = env.port("finder")
    formatter = env.port("formatter")

    class UserInterface:
        def process(self, keyword):
            count = finder.process(keyword)
            return formatter.process(str(count))

    return UserInterface()
