import { ServiceApi } from "./api";
import { ValidatorView, WizardView } from "./ui";

const app = document.getElementById("app")!;
const api = new ServiceApi("");

function loginForm(): void {
  app.replaceChildren();
  const worker = document.createElement("input");
  worker.placeholder = "worker id";
  const role = document.createElement("select");
  for (const value of ["annotator", "validator"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    role.append(option);
  }
  const go = document.createElement("button");
  go.textContent = "start";
  go.onclick = () => {
    const workerId = worker.value.trim();
    if (!workerId) return;
    if (role.value === "annotator") {
      void new WizardView(api, app, workerId).start();
    } else {
      void new ValidatorView(api, app, workerId).start();
    }
  };
  const heading = document.createElement("h2");
  heading.textContent = "Annotation workbench";
  app.append(heading, worker, role, go);
}

loginForm();
