# Text formatter. Identity unless a template parameter ("{} is the value")
# is configured.


def create(env):
    template = env.params.get("template", "")

    class Formatter:
        def process(self, text):
            if template:
                return template.replace("{}", text)
            return text

    return Formatter()
